#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "laa/errors.hpp"
#include "laa/model_io.hpp"
#include "laa/rng.hpp"

using namespace laa::model_io;
using laa::ParseError;

namespace {

laa::nn::Matrix random_sequence(int rows, int cols, std::uint64_t seed) {
  laa::Rng rng(seed);
  laa::nn::Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(-1.0, 1.0);
  return m;
}

SavedModel lstm_fixture() {
  SavedModel model;
  model.kind = "lstm";
  model.lstm = laa::nn::LstmParams::init(5, 4, 0.3, 11);
  model.threshold = 0.5;
  model.normalizer.min.assign(5, -1.0);
  model.normalizer.max.assign(5, 1.0);
  return model;
}

}  // namespace

TEST_CASE("lstm model round-trips bit for bit") {
  SavedModel model = lstm_fixture();
  std::stringstream buf;
  save_model(model, buf);
  SavedModel back = load_model(buf);

  CHECK(back.kind == "lstm");
  CHECK(back.threshold == model.threshold);
  CHECK(back.normalizer.min == model.normalizer.min);
  CHECK(back.normalizer.max == model.normalizer.max);
  CHECK((back.lstm.w_f.array() == model.lstm.w_f.array()).all());
  CHECK((back.lstm.w_i.array() == model.lstm.w_i.array()).all());
  CHECK((back.lstm.w_c.array() == model.lstm.w_c.array()).all());
  CHECK((back.lstm.w_o.array() == model.lstm.w_o.array()).all());
  CHECK((back.lstm.b_f.array() == model.lstm.b_f.array()).all());
  CHECK((back.lstm.b_o.array() == model.lstm.b_o.array()).all());
  CHECK((back.lstm.w_out.array() == model.lstm.w_out.array()).all());
  CHECK(back.lstm.b_out == model.lstm.b_out);

  auto seq = random_sequence(6, 5, 3);
  CHECK(laa::nn::sequence_forward(seq, back.lstm) ==
        laa::nn::sequence_forward(seq, model.lstm));

  std::stringstream again;
  save_model(back, again);
  CHECK(buf.str() == again.str());
}

TEST_CASE("mlp model round-trips bit for bit") {
  SavedModel model;
  model.kind = "mlp";
  model.mlp = laa::nn::MlpParams::init(12, 7, 0.2, 9);
  model.threshold = 0.625;
  model.normalizer.min = {0.0, 1.0, 2.0};
  model.normalizer.max = {1.0, 1.0, 4.0};
  std::stringstream buf;
  save_model(model, buf);
  SavedModel back = load_model(buf);

  CHECK(back.kind == "mlp");
  CHECK(back.threshold == 0.625);
  CHECK((back.mlp.w1.array() == model.mlp.w1.array()).all());
  CHECK((back.mlp.b1.array() == model.mlp.b1.array()).all());
  CHECK((back.mlp.w2.array() == model.mlp.w2.array()).all());
  CHECK(back.mlp.b2 == model.mlp.b2);

  auto seq = random_sequence(4, 3, 5);
  CHECK(laa::nn::mlp_forward(seq, back.mlp) ==
        laa::nn::mlp_forward(seq, model.mlp));
}

TEST_CASE("model loader rejects malformed documents") {
  SavedModel model = lstm_fixture();
  std::stringstream buf;
  save_model(model, buf);
  std::string text = buf.str();

  auto parse = [](std::string s) {
    std::istringstream in(s);
    return load_model(in);
  };
  CHECK_THROWS_AS(parse("not json"), ParseError);
  CHECK_THROWS_AS(parse("{}"), ParseError);

  std::string bad_schema = text;
  bad_schema.replace(bad_schema.find("\"schema\":1"), 10, "\"schema\":9");
  CHECK_THROWS_AS(parse(bad_schema), ParseError);

  std::string bad_kind = text;
  bad_kind.replace(bad_kind.find("\"kind\":\"lstm\""), 13, "\"kind\":\"gru\"");
  CHECK_THROWS_AS(parse(bad_kind), ParseError);

  std::string bad_size = text;
  bad_size.replace(bad_size.find("\"hidden_size\":4"), 15,
                   "\"hidden_size\":5");
  CHECK_THROWS_AS(parse(bad_size), ParseError);

  std::string bad_threshold = text;
  bad_threshold.replace(bad_threshold.find("\"threshold\":0.5"), 15,
                        "\"threshold\":1.5");
  CHECK_THROWS_AS(parse(bad_threshold), ParseError);

  CHECK_THROWS_AS(
      [&] {
        SavedModel wrong = lstm_fixture();
        wrong.kind = "gru";
        std::ostringstream out;
        save_model(wrong, out);
      }(),
      std::invalid_argument);
}

TEST_CASE("history csv carries one row per epoch") {
  std::vector<laa::nn::EpochStats> history = {{1, 0.69, 0.5},
                                              {2, 0.42, 0.875}};
  std::ostringstream out;
  write_history_csv(history, out);
  CHECK(out.str() ==
        "epoch,train_loss,val_accuracy\n"
        "1,0.69,0.5\n"
        "2,0.42,0.875\n");
  std::ostringstream empty;
  write_history_csv({}, empty);
  CHECK(empty.str() == "epoch,train_loss,val_accuracy\n");
}
