#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "laa/commands.hpp"
#include "laa/errors.hpp"

namespace {

struct Flags {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  std::string network;
  std::string data;
  std::string model;
  std::string split;
  std::string prices;
  int days = 0;
  int threads = 0;
  int epochs = 0;
  std::int64_t impact_day = 0;
  double gamma = 0.0;
  std::vector<int> aggregators;
  std::string detect_model;
  std::string detect_scenario;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON run configuration");
  sub->add_option("--seed", f.seed, "master seed override");
  sub->add_option("--out", f.out, "output directory override");
}

bool passed(const CLI::App* sub, const std::string& name) {
  const CLI::Option* opt = sub->get_option_no_throw(name);
  return opt != nullptr && opt->count() > 0;
}

laa::cli::RunConfig assemble(const CLI::App* sub, const Flags& f) {
  laa::cli::RunConfig cfg;
  if (passed(sub, "--config")) cfg = laa::cli::load_run_config(f.config);
  if (passed(sub, "--seed")) cfg.master_seed = f.seed;
  if (passed(sub, "--out")) cfg.out_dir = f.out;
  if (passed(sub, "--network")) cfg.network_path = f.network;
  if (passed(sub, "--data")) cfg.data_dir = f.data;
  if (passed(sub, "--model")) cfg.model = f.model;
  if (passed(sub, "--split")) cfg.eval_split = f.split;
  if (passed(sub, "--prices")) cfg.prices_csv = f.prices;
  if (passed(sub, "--days")) cfg.day_count = f.days;
  if (passed(sub, "--threads")) cfg.threads = f.threads;
  if (passed(sub, "--epochs")) cfg.train.epochs = f.epochs;
  if (passed(sub, "--day")) cfg.impact_day = f.impact_day;
  if (passed(sub, "--gamma")) cfg.generator.gamma = f.gamma;
  if (passed(sub, "--aggregators")) cfg.impact_aggregators = f.aggregators;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"day-ahead congestion market, load-altering attacks, and "
               "sequence detectors on the 33-bus feeder"};
  app.require_subcommand(1);
  Flags f;

  CLI::App* generate =
      app.add_subcommand("generate", "simulate labeled scenario days");
  add_common(generate, f);
  generate->add_option("--network", f.network, "feeder description csv");
  generate->add_option("--days", f.days, "number of days to simulate");
  generate->add_option("--threads", f.threads, "worker threads");

  CLI::App* train =
      app.add_subcommand("train", "fit detectors on a generated manifest");
  add_common(train, f);
  train->add_option("--data", f.data, "directory holding manifest.csv");
  train->add_option("--model", f.model, "lstm, mlp, or both");
  train->add_option("--epochs", f.epochs, "training epochs override");
  train->add_option("--threads", f.threads, "worker threads");

  CLI::App* evaluate =
      app.add_subcommand("evaluate", "score trained detectors on a split");
  add_common(evaluate, f);
  evaluate->add_option("--data", f.data, "directory holding manifest.csv");
  evaluate->add_option("--model", f.model, "lstm, mlp, or both");
  evaluate->add_option("--split", f.split, "train or test");

  CLI::App* impact = app.add_subcommand(
      "attack-impact", "hourly clean vs attacked flows and tariffs");
  add_common(impact, f);
  impact->add_option("--network", f.network, "feeder description csv");
  impact->add_option("--day", f.impact_day, "day index to study");
  impact->add_option("--gamma", f.gamma, "alteration bound");
  impact->add_option("--aggregators", f.aggregators,
                     "compromised aggregator ids");
  impact->add_option("--prices", f.prices, "day-ahead prices csv override");

  CLI::App* detect =
      app.add_subcommand("detect", "score one scenario file with one model");
  add_common(detect, f);
  detect->add_option("model", f.detect_model, "trained model json")
      ->required();
  detect->add_option("scenario", f.detect_scenario, "scenario day json")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (generate->parsed()) laa::cli::cmd_generate(assemble(generate, f));
    if (train->parsed()) laa::cli::cmd_train(assemble(train, f));
    if (evaluate->parsed()) laa::cli::cmd_evaluate(assemble(evaluate, f));
    if (impact->parsed()) laa::cli::cmd_attack_impact(assemble(impact, f));
    if (detect->parsed()) laa::cli::cmd_detect(f.detect_model, f.detect_scenario);
  } catch (const laa::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const laa::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
