// Wall-clock comparison of the serial reference paths against the OpenMP
// ones, with a bitwise equality check on every compared output.
#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "laa/dataset.hpp"
#include "laa/grid.hpp"
#include "laa/nn.hpp"
#include "laa/rng.hpp"

namespace {

using laa::dataset::GeneratorConfig;
using laa::dataset::ScenarioDay;
using laa::nn::Matrix;

double elapsed_ms(const std::function<void()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

std::string serialize_all(const std::vector<ScenarioDay>& days) {
  std::ostringstream out;
  for (const auto& day : days) {
    laa::dataset::write_scenario(day, out);
  }
  return out.str();
}

template <typename T>
bool same(const T& a, const T& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         a.cwiseEqual(b).all();
}

void report(const char* name, double serial_ms, double parallel_ms,
            bool identical) {
  std::printf("%-24s serial %8.1f ms   parallel %8.1f ms   speedup %.2fx   %s\n",
              name, serial_ms, parallel_ms,
              parallel_ms > 0.0 ? serial_ms / parallel_ms : 0.0,
              identical ? "outputs identical" : "OUTPUTS DIFFER");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"serial vs OpenMP benchmark"};
  int threads = 4;
  int day_count = 24;
  int batch = 256;
  int reps = 8;
  std::string network_path = "data/ieee33_network.csv";
  app.add_option("--threads", threads, "OpenMP thread count")
      ->check(CLI::PositiveNumber);
  app.add_option("--days", day_count, "scenario days to generate")
      ->check(CLI::PositiveNumber);
  app.add_option("--batch", batch, "gradient batch size")
      ->check(CLI::PositiveNumber);
  app.add_option("--reps", reps, "gradient repetitions")
      ->check(CLI::PositiveNumber);
  app.add_option("--network", network_path, "feeder description CSV");
  CLI11_PARSE(app, argc, argv);

  std::ifstream net_in(network_path);
  if (!net_in) {
    std::fprintf(stderr, "error: cannot open network '%s'\n",
                 network_path.c_str());
    return 2;
  }
  const auto net = laa::grid::load_network(net_in);

  bool all_identical = true;

  {
    GeneratorConfig cfg;
    std::vector<ScenarioDay> serial_days, parallel_days;
    const double serial_ms = elapsed_ms(
        [&] { serial_days = laa::dataset::generate_days(net, cfg, 7, day_count); });
    cfg.threads = threads;
    const double parallel_ms = elapsed_ms(
        [&] { parallel_days = laa::dataset::generate_days(net, cfg, 7, day_count); });
    const bool identical =
        serialize_all(serial_days) == serialize_all(parallel_days);
    all_identical = all_identical && identical;
    report("scenario generation", serial_ms, parallel_ms, identical);
  }

  // Synthetic batch shaped like the real sequences: 24 steps, 67 features.
  std::vector<Matrix> sequences;
  std::vector<int> labels;
  laa::Rng rng(99);
  for (int i = 0; i < batch; ++i) {
    Matrix seq(24, laa::dataset::kFeatureCount);
    for (int r = 0; r < seq.rows(); ++r) {
      for (int c = 0; c < seq.cols(); ++c) {
        seq(r, c) = rng.uniform01();
      }
    }
    sequences.push_back(std::move(seq));
    labels.push_back(static_cast<int>(rng.uniform_int(2)));
  }
  std::vector<const Matrix*> xs;
  for (const auto& seq : sequences) {
    xs.push_back(&seq);
  }

  {
    const auto params =
        laa::nn::LstmParams::init(laa::dataset::kFeatureCount, 32, 0.1, 5);
    laa::nn::LstmGradients serial_g =
        laa::nn::LstmGradients::zeros(params.input_size, params.hidden_size);
    laa::nn::LstmGradients parallel_g = serial_g;
    double serial_loss = 0.0, parallel_loss = 0.0;
    const double serial_ms = elapsed_ms([&] {
      for (int r = 0; r < reps; ++r) {
        serial_g = laa::nn::lstm_batch_gradient_serial(params, xs, labels,
                                                       &serial_loss);
      }
    });
    const double parallel_ms = elapsed_ms([&] {
      for (int r = 0; r < reps; ++r) {
        parallel_g = laa::nn::lstm_batch_gradient(params, xs, labels,
                                                  &parallel_loss, threads);
      }
    });
    bool identical = serial_loss == parallel_loss;
    identical = identical && same(serial_g.w_f, parallel_g.w_f) &&
                same(serial_g.w_i, parallel_g.w_i) &&
                same(serial_g.w_c, parallel_g.w_c) &&
                same(serial_g.w_o, parallel_g.w_o) &&
                same(serial_g.b_f, parallel_g.b_f) &&
                same(serial_g.b_i, parallel_g.b_i) &&
                same(serial_g.b_c, parallel_g.b_c) &&
                same(serial_g.b_o, parallel_g.b_o) &&
                same(serial_g.w_out, parallel_g.w_out) &&
                serial_g.b_out == parallel_g.b_out;
    all_identical = all_identical && identical;
    report("lstm batch gradient", serial_ms, parallel_ms, identical);
  }

  {
    const auto params =
        laa::nn::MlpParams::init(24 * laa::dataset::kFeatureCount, 64, 0.1, 5);
    laa::nn::MlpGradients serial_g =
        laa::nn::MlpGradients::zeros(params.input_size, params.hidden_size);
    laa::nn::MlpGradients parallel_g = serial_g;
    double serial_loss = 0.0, parallel_loss = 0.0;
    const double serial_ms = elapsed_ms([&] {
      for (int r = 0; r < reps; ++r) {
        serial_g = laa::nn::mlp_batch_gradient_serial(params, xs, labels,
                                                      &serial_loss);
      }
    });
    const double parallel_ms = elapsed_ms([&] {
      for (int r = 0; r < reps; ++r) {
        parallel_g = laa::nn::mlp_batch_gradient(params, xs, labels,
                                                 &parallel_loss, threads);
      }
    });
    bool identical = serial_loss == parallel_loss;
    identical = identical && same(serial_g.w1, parallel_g.w1) &&
                same(serial_g.b1, parallel_g.b1) &&
                same(serial_g.w2, parallel_g.w2) &&
                serial_g.b2 == parallel_g.b2;
    all_identical = all_identical && identical;
    report("mlp batch gradient", serial_ms, parallel_ms, identical);
  }

  return all_identical ? 0 : 1;
}
