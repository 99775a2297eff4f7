#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "laa/dataset.hpp"
#include "laa/nn.hpp"

namespace laa::cli {

// One experiment bundle: JSON config file plus flag overrides (flags win).
struct RunConfig {
  std::uint64_t master_seed = 1;
  int day_count = 60;
  int threads = 1;
  std::string network_path = "data/ieee33_network.csv";
  std::string out_dir = "out";
  std::string data_dir;  // manifest location; defaults to out_dir
  std::string model = "lstm";  // lstm, mlp, or both
  double val_fraction = 0.15;
  std::string eval_split = "test";
  std::int64_t impact_day = 0;
  std::vector<int> impact_aggregators = {3, 7};
  std::string prices_csv;  // overrides synthetic prices in attack-impact
  dataset::GeneratorConfig generator;
  nn::TrainConfig train;

  std::string manifest_dir() const {
    return data_dir.empty() ? out_dir : data_dir;
  }
};

RunConfig load_run_config(const std::string& path);

// Subcommand bodies; they throw, the entry point maps exceptions to exit
// codes (parse/config/usage 2, domain failures 1).
void cmd_generate(const RunConfig& cfg);
void cmd_train(const RunConfig& cfg);
void cmd_evaluate(const RunConfig& cfg);
void cmd_attack_impact(const RunConfig& cfg);
void cmd_detect(const std::string& model_path,
                const std::string& scenario_path);

}  // namespace laa::cli
