#include "laa/model_io.hpp"

#include <cmath>
#include <json.hpp>

#include "laa/csv.hpp"
#include "laa/errors.hpp"

namespace laa::model_io {

namespace {

using nlohmann::json;

json flat(const nn::Matrix& m) {
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) v.push_back(m(r, c));
  return json(v);
}

json flat(const nn::Vector& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

nn::Matrix read_matrix(const json& node, const char* what, Eigen::Index rows,
                       Eigen::Index cols) {
  if (!node.is_array() ||
      node.size() != static_cast<std::size_t>(rows * cols))
    throw ParseError(std::string(what) + ": expected " +
                     std::to_string(rows * cols) + " values");
  nn::Matrix m(rows, cols);
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = node[i++].get<double>();
  return m;
}

nn::Vector read_vector(const json& node, const char* what, Eigen::Index size) {
  if (!node.is_array() || node.size() != static_cast<std::size_t>(size))
    throw ParseError(std::string(what) + ": expected " + std::to_string(size) +
                     " values");
  nn::Vector v(size);
  for (Eigen::Index i = 0; i < size; ++i) v(i) = node[i].get<double>();
  return v;
}

std::vector<double> read_flat(const json& node, const char* what) {
  if (!node.is_array())
    throw ParseError(std::string(what) + ": expected an array");
  std::vector<double> v;
  v.reserve(node.size());
  for (const auto& x : node) v.push_back(x.get<double>());
  return v;
}

}  // namespace

void save_model(const SavedModel& model, std::ostream& out) {
  json j;
  j["schema"] = 1;
  j["kind"] = model.kind;
  j["threshold"] = model.threshold;
  j["normalizer"] = {{"min", model.normalizer.min},
                     {"max", model.normalizer.max}};
  if (model.kind == "lstm") {
    const nn::LstmParams& p = model.lstm;
    j["lstm"] = {{"input_size", p.input_size},
                 {"hidden_size", p.hidden_size},
                 {"w_f", flat(p.w_f)},
                 {"w_i", flat(p.w_i)},
                 {"w_c", flat(p.w_c)},
                 {"w_o", flat(p.w_o)},
                 {"b_f", flat(p.b_f)},
                 {"b_i", flat(p.b_i)},
                 {"b_c", flat(p.b_c)},
                 {"b_o", flat(p.b_o)},
                 {"w_out", flat(p.w_out)},
                 {"b_out", p.b_out}};
  } else if (model.kind == "mlp") {
    const nn::MlpParams& p = model.mlp;
    j["mlp"] = {{"input_size", p.input_size},
                {"hidden_size", p.hidden_size},
                {"w1", flat(p.w1)},
                {"b1", flat(p.b1)},
                {"w2", flat(p.w2)},
                {"b2", p.b2}};
  } else {
    throw std::invalid_argument("unknown model kind '" + model.kind + "'");
  }
  out << j.dump() << '\n';
}

SavedModel load_model(std::istream& in) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(std::string("model json: ") + e.what());
  }
  try {
    if (!j.is_object() || j.value("schema", -1) != 1)
      throw ParseError("model json: unsupported schema");
    SavedModel model;
    model.kind = j.at("kind").get<std::string>();
    model.threshold = j.at("threshold").get<double>();
    if (!std::isfinite(model.threshold) || model.threshold <= 0.0 ||
        model.threshold >= 1.0)
      throw ParseError("model json: threshold must lie in (0, 1)");
    const json& norm = j.at("normalizer");
    model.normalizer.min = read_flat(norm.at("min"), "normalizer.min");
    model.normalizer.max = read_flat(norm.at("max"), "normalizer.max");
    if (model.normalizer.min.size() != model.normalizer.max.size())
      throw ParseError("model json: normalizer min/max sizes differ");

    if (model.kind == "lstm") {
      const json& n = j.at("lstm");
      nn::LstmParams& p = model.lstm;
      p.input_size = n.at("input_size").get<int>();
      p.hidden_size = n.at("hidden_size").get<int>();
      if (p.input_size < 1 || p.hidden_size < 1)
        throw ParseError("model json: non-positive layer size");
      const Eigen::Index h = p.hidden_size;
      const Eigen::Index z = p.input_size + p.hidden_size;
      p.w_f = read_matrix(n.at("w_f"), "w_f", h, z);
      p.w_i = read_matrix(n.at("w_i"), "w_i", h, z);
      p.w_c = read_matrix(n.at("w_c"), "w_c", h, z);
      p.w_o = read_matrix(n.at("w_o"), "w_o", h, z);
      p.b_f = read_vector(n.at("b_f"), "b_f", h);
      p.b_i = read_vector(n.at("b_i"), "b_i", h);
      p.b_c = read_vector(n.at("b_c"), "b_c", h);
      p.b_o = read_vector(n.at("b_o"), "b_o", h);
      p.w_out = read_vector(n.at("w_out"), "w_out", h);
      p.b_out = n.at("b_out").get<double>();
    } else if (model.kind == "mlp") {
      const json& n = j.at("mlp");
      nn::MlpParams& p = model.mlp;
      p.input_size = n.at("input_size").get<int>();
      p.hidden_size = n.at("hidden_size").get<int>();
      if (p.input_size < 1 || p.hidden_size < 1)
        throw ParseError("model json: non-positive layer size");
      p.w1 = read_matrix(n.at("w1"), "w1", p.hidden_size, p.input_size);
      p.b1 = read_vector(n.at("b1"), "b1", p.hidden_size);
      p.w2 = read_vector(n.at("w2"), "w2", p.hidden_size);
      p.b2 = n.at("b2").get<double>();
    } else {
      throw ParseError("model json: unknown kind '" + model.kind + "'");
    }
    return model;
  } catch (const json::exception& e) {
    throw ParseError(std::string("model json: ") + e.what());
  }
}

void write_history_csv(const std::vector<nn::EpochStats>& history,
                       std::ostream& out) {
  out << "epoch,train_loss,val_accuracy\n";
  for (const nn::EpochStats& row : history)
    out << row.epoch << ',' << csv::format_double(row.train_loss) << ','
        << csv::format_double(row.val_accuracy) << '\n';
}

}  // namespace laa::model_io
