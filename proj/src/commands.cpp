#include "laa/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "laa/attack.hpp"
#include "laa/csv.hpp"
#include "laa/errors.hpp"
#include "laa/eval.hpp"
#include "laa/model_io.hpp"
#include "laa/rng.hpp"

namespace laa::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ifstream open_input(const fs::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(std::string("cannot open ") + what + " '" +
                            path.string() + "'");
  return in;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  return out;
}

grid::NetworkModel load_network_file(const std::string& path) {
  auto in = open_input(path, "network file");
  return grid::load_network(in);
}

void require_range(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

template <typename T>
bool fetch(const json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return false;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config key '") + key +
                      "' has the wrong type");
  }
  return true;
}

void reject_unknown(const json& j, const std::set<std::string>& known,
                    const char* scope) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key()))
      throw ConfigError(std::string("unknown config key '") + it.key() +
                        "' in " + scope);
}

struct ManifestRow {
  std::string file;
  int label = 0;
  std::string split;
};

std::string scenario_name(int day) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "scenarios/day_%05d.json", day);
  return buf;
}

std::vector<ManifestRow> read_manifest(const fs::path& dir) {
  auto in = open_input(dir / "manifest.csv", "manifest");
  auto rows = csv::read_rows(in);
  if (rows.empty() || rows[0].fields != std::vector<std::string>{
                                            "file", "label", "split"})
    throw ParseError("manifest must start with header file,label,split");
  std::vector<ManifestRow> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const csv::Row& row = rows[i];
    if (row.fields.size() != 3)
      throw ParseError("manifest line " + std::to_string(row.line_no) +
                       ": expected 3 fields");
    ManifestRow m;
    m.file = row.fields[0];
    m.label = static_cast<int>(
        csv::parse_int(row.fields[1], row.line_no, "label"));
    if (m.label != 0 && m.label != 1)
      throw ParseError("manifest line " + std::to_string(row.line_no) +
                       ": label must be 0 or 1");
    m.split = row.fields[2];
    if (m.split != "train" && m.split != "test")
      throw ParseError("manifest line " + std::to_string(row.line_no) +
                       ": split must be train or test");
    out.push_back(std::move(m));
  }
  return out;
}

// Raw (unnormalized) sequences for the selected manifest rows.
void load_rows(const fs::path& dir, const std::vector<ManifestRow>& rows,
               std::vector<nn::Matrix>& xs, std::vector<int>& ys) {
  xs.clear();
  ys.clear();
  for (const ManifestRow& row : rows) {
    auto in = open_input(dir / row.file, "scenario");
    dataset::ScenarioDay day = dataset::read_scenario(in);
    if (day.label != row.label)
      throw ParseError("scenario '" + row.file +
                       "' disagrees with the manifest label");
    xs.push_back(dataset::extract_features(day));
    ys.push_back(day.label);
  }
}

std::vector<grid::PowerFlowResult> hourly_flows(
    const grid::NetworkModel& net, const market::LoadSchedule& schedule) {
  std::vector<grid::PowerFlowResult> flows(grid::kHours);
  for (int h = 0; h < grid::kHours; ++h) {
    std::vector<double> p = schedule.bus_column(h);
    flows[h] = grid::solve_power_flow(net, p, net.q_for_load(p));
    if (!flows[h].converged)
      throw NumericError("power flow diverged at hour " + std::to_string(h));
  }
  return flows;
}

std::vector<std::string> requested_models(const std::string& model) {
  if (model == "lstm" || model == "mlp") return {model};
  if (model == "both") return {"lstm", "mlp"};
  throw ConfigError("model must be lstm, mlp, or both, not '" + model + "'");
}

// Deterministic validation carve from the training rows.
void carve_validation(std::uint64_t master_seed, double val_fraction,
                      const std::vector<nn::Matrix>& xs,
                      const std::vector<int>& ys,
                      std::vector<nn::Matrix>& train_x,
                      std::vector<int>& train_y,
                      std::vector<nn::Matrix>& val_x,
                      std::vector<int>& val_y) {
  const int n = static_cast<int>(xs.size());
  if (n < 2) throw ConfigError("need at least 2 training days");
  int k = std::clamp(static_cast<int>(val_fraction * n), 1, n - 1);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  Rng rng(derive_seed(master_seed, SeedPurpose::Split, 2));
  rng.shuffle(order);
  for (int i = 0; i < n; ++i) {
    if (i < k) {
      val_x.push_back(xs[order[i]]);
      val_y.push_back(ys[order[i]]);
    } else {
      train_x.push_back(xs[order[i]]);
      train_y.push_back(ys[order[i]]);
    }
  }
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
  auto in = open_input(path, "config");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(std::string("config json: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("config json: expected an object");

  RunConfig cfg;
  reject_unknown(j,
                 {"master_seed", "day_count", "threads", "network", "out",
                  "data", "model", "val_fraction", "eval_split", "impact_day",
                  "impact_aggregators", "prices_csv", "gamma", "tariff_step",
                  "max_rounds", "attack_hours", "noise_low", "noise_high",
                  "train"},
                 "config");
  fetch(j, "master_seed", cfg.master_seed);
  fetch(j, "day_count", cfg.day_count);
  fetch(j, "threads", cfg.threads);
  fetch(j, "network", cfg.network_path);
  fetch(j, "out", cfg.out_dir);
  fetch(j, "data", cfg.data_dir);
  fetch(j, "model", cfg.model);
  fetch(j, "val_fraction", cfg.val_fraction);
  fetch(j, "eval_split", cfg.eval_split);
  fetch(j, "impact_day", cfg.impact_day);
  fetch(j, "impact_aggregators", cfg.impact_aggregators);
  fetch(j, "prices_csv", cfg.prices_csv);
  fetch(j, "gamma", cfg.generator.gamma);
  fetch(j, "tariff_step", cfg.generator.tariff_step);
  fetch(j, "max_rounds", cfg.generator.max_rounds);
  fetch(j, "attack_hours", cfg.generator.attack_hours);
  fetch(j, "noise_low", cfg.generator.noise_low);
  fetch(j, "noise_high", cfg.generator.noise_high);
  if (auto it = j.find("train"); it != j.end()) {
    const json& t = *it;
    if (!t.is_object()) throw ConfigError("config key 'train' must be an object");
    reject_unknown(t,
                   {"hidden_size", "learning_rate", "momentum", "epochs",
                    "batch_size", "init_scale", "decision_threshold",
                    "grad_clip"},
                   "train");
    fetch(t, "hidden_size", cfg.train.hidden_size);
    fetch(t, "learning_rate", cfg.train.learning_rate);
    fetch(t, "momentum", cfg.train.momentum);
    fetch(t, "epochs", cfg.train.epochs);
    fetch(t, "batch_size", cfg.train.batch_size);
    fetch(t, "init_scale", cfg.train.init_scale);
    fetch(t, "decision_threshold", cfg.train.decision_threshold);
    fetch(t, "grad_clip", cfg.train.grad_clip);
  }

  require_range(cfg.day_count >= 1, "day_count must be at least 1");
  require_range(cfg.threads >= 1, "threads must be at least 1");
  require_range(cfg.val_fraction >= 0.0 && cfg.val_fraction <= 0.5,
                "val_fraction must lie in [0, 0.5]");
  require_range(cfg.generator.gamma >= 0.0 && cfg.generator.gamma <= 1.0,
                "gamma must lie in [0, 1]");
  requested_models(cfg.model);
  require_range(cfg.eval_split == "train" || cfg.eval_split == "test",
                "eval_split must be train or test");
  return cfg;
}

void cmd_generate(const RunConfig& cfg) {
  grid::NetworkModel net = load_network_file(cfg.network_path);
  dataset::GeneratorConfig gen = cfg.generator;
  gen.threads = cfg.threads;
  std::vector<dataset::ScenarioDay> days =
      dataset::generate_days(net, gen, cfg.master_seed, cfg.day_count);

  std::vector<int> labels;
  labels.reserve(days.size());
  for (const auto& d : days) labels.push_back(d.label);
  dataset::SplitResult split = dataset::split_dataset(labels, cfg.master_seed);
  std::vector<std::string> part(days.size(), "train");
  for (int idx : split.test) part[idx] = "test";

  fs::create_directories(fs::path(cfg.out_dir) / "scenarios");
  std::ostringstream manifest;
  manifest << "file,label,split\n";
  for (std::size_t i = 0; i < days.size(); ++i) {
    std::string name = scenario_name(static_cast<int>(i));
    auto out = open_output(fs::path(cfg.out_dir) / name);
    dataset::write_scenario(days[i], out);
    manifest << name << ',' << days[i].label << ',' << part[i] << '\n';
  }
  open_output(fs::path(cfg.out_dir) / "manifest.csv") << manifest.str();

  int attacked = 0;
  for (int l : labels) attacked += l;
  std::cout << "wrote " << days.size() << " scenarios (" << attacked
            << " attacked, " << split.test.size() << " test) to "
            << cfg.out_dir << "\n";
}

void cmd_train(const RunConfig& cfg) {
  auto rows = read_manifest(cfg.manifest_dir());
  std::vector<ManifestRow> train_rows;
  for (const auto& r : rows)
    if (r.split == "train") train_rows.push_back(r);
  if (train_rows.size() < 2)
    throw ConfigError("manifest has fewer than 2 training days");

  std::vector<nn::Matrix> raw;
  std::vector<int> labels;
  load_rows(cfg.manifest_dir(), train_rows, raw, labels);

  // The normalizer belongs to the whole non-test pool.
  dataset::NormalizationStats stats = dataset::fit_normalizer(raw);
  for (auto& x : raw) x = dataset::apply_normalizer(stats, x);

  std::vector<nn::Matrix> train_x, val_x;
  std::vector<int> train_y, val_y;
  carve_validation(cfg.master_seed, cfg.val_fraction, raw, labels, train_x,
                   train_y, val_x, val_y);
  std::cout << "training on " << train_x.size() << " days, validating on "
            << val_x.size() << "\n";

  nn::TrainConfig tc = cfg.train;
  tc.seed = cfg.master_seed;
  tc.threads = cfg.threads;

  for (const std::string& kind : requested_models(cfg.model)) {
    model_io::SavedModel saved;
    saved.kind = kind;
    saved.threshold = tc.decision_threshold;
    saved.normalizer = stats;
    std::vector<nn::EpochStats> history;
    if (kind == "lstm") {
      nn::LstmTrainResult res = nn::train_lstm(train_x, train_y, val_x, val_y, tc);
      saved.lstm = std::move(res.params);
      history = std::move(res.history);
    } else {
      nn::MlpTrainResult res = nn::train_mlp(train_x, train_y, val_x, val_y, tc);
      saved.mlp = std::move(res.params);
      history = std::move(res.history);
    }
    fs::create_directories(cfg.out_dir);
    auto model_out = open_output(fs::path(cfg.out_dir) / ("model_" + kind + ".json"));
    model_io::save_model(saved, model_out);
    auto hist_out = open_output(fs::path(cfg.out_dir) / ("history_" + kind + ".csv"));
    model_io::write_history_csv(history, hist_out);
    double best = 0.0;
    int best_epoch = 0;
    for (const auto& e : history)
      if (e.val_accuracy > best) {
        best = e.val_accuracy;
        best_epoch = e.epoch;
      }
    std::cout << kind << ": " << history.size()
              << " epochs, best val accuracy " << best << " at epoch "
              << best_epoch << "\n";
  }
}

void cmd_evaluate(const RunConfig& cfg) {
  auto rows = read_manifest(cfg.manifest_dir());
  if (cfg.eval_split == "train")
    std::cerr << "warning: evaluating on the training split; results leak "
                 "training data\n";
  std::vector<ManifestRow> picked;
  for (const auto& r : rows)
    if (r.split == cfg.eval_split) picked.push_back(r);
  if (picked.empty())
    throw ConfigError("split '" + cfg.eval_split + "' has no days");

  std::vector<nn::Matrix> raw;
  std::vector<int> labels;
  load_rows(cfg.manifest_dir(), picked, raw, labels);

  std::vector<eval::NamedMatrix> table;
  for (const std::string& kind : requested_models(cfg.model)) {
    auto in = open_input(fs::path(cfg.out_dir) / ("model_" + kind + ".json"),
                         "model");
    model_io::SavedModel model = model_io::load_model(in);
    if (model.kind != kind)
      throw ConfigError("model file holds a " + model.kind + ", expected " +
                        kind);
    std::vector<int> preds;
    preds.reserve(raw.size());
    for (const auto& x : raw) {
      nn::Matrix norm = dataset::apply_normalizer(model.normalizer, x);
      preds.push_back(kind == "lstm"
                          ? nn::predict(norm, model.lstm, model.threshold)
                          : nn::mlp_predict(norm, model.mlp, model.threshold));
    }
    table.push_back({kind, eval::confusion(preds, labels)});
  }

  std::string text = eval::report_text(table);
  std::cout << text;
  open_output(fs::path(cfg.out_dir) / "report.txt") << text;
  open_output(fs::path(cfg.out_dir) / "report.csv") << eval::report_csv(table);
}

void cmd_attack_impact(const RunConfig& cfg) {
  grid::NetworkModel net = load_network_file(cfg.network_path);
  dataset::GeneratorConfig gen = cfg.generator;
  gen.threads = cfg.threads;
  market::Population pop = market::generate_population(
      net, gen.population, derive_seed(cfg.master_seed, SeedPurpose::Roster, 0));
  market::AggregatorMap map = market::AggregatorMap::build(pop);
  map.validate(net);
  market::Population day_pop =
      dataset::day_population(pop, gen, cfg.master_seed, cfg.impact_day);
  dataset::HourlyTemp temp =
      dataset::generate_weather(gen.weather, cfg.master_seed, cfg.impact_day);
  market::HourlyPrice prices;
  if (cfg.prices_csv.empty()) {
    prices = dataset::generate_prices(gen.prices, cfg.master_seed,
                                      cfg.impact_day);
  } else {
    auto in = open_input(cfg.prices_csv, "prices csv");
    prices = dataset::ingest_prices(in);
  }

  attack::AttackConfig ac;
  ac.compromised_aggregators.insert(cfg.impact_aggregators.begin(),
                                    cfg.impact_aggregators.end());
  ac.gamma = gen.gamma;
  ac.seed = derive_seed(cfg.master_seed, SeedPurpose::AttackDelta,
                        cfg.impact_day);
  ac.hours = gen.attack_hours;

  // Flows before any congestion response: single clearing round.
  market::TariffLoopResult pre =
      market::dso_tariff_loop(net, day_pop, map, prices, temp,
                              gen.tariff_step, 1, cfg.threads);
  market::LoadSchedule pre_attacked = attack::inject_laa(pre.schedule, map, ac);
  std::vector<grid::PowerFlowResult> pre_attacked_flows =
      hourly_flows(net, pre_attacked);

  // Tariffs after the loop settles, with and without the unseen alteration.
  market::TariffLoopResult clean =
      market::dso_tariff_loop(net, day_pop, map, prices, temp,
                              gen.tariff_step, gen.max_rounds, cfg.threads);
  market::TariffLoopResult attacked = market::dso_tariff_loop(
      net, day_pop, map, prices, temp, gen.tariff_step, gen.max_rounds,
      cfg.threads,
      [&](market::LoadSchedule& s) { s = attack::inject_laa(s, map, ac); });

  market::HourlyPrice clean_price = clean.tariff.effective();
  market::HourlyPrice attacked_price = attacked.tariff.effective();
  std::ostringstream out;
  out << "hour,clean_feeder_kva,attacked_feeder_kva,clean_price_usd_per_kwh,"
         "attacked_price_usd_per_kwh\n";
  for (int h = 0; h < grid::kHours; ++h) {
    out << h << ',' << csv::format_double(pre.flows[h].line_flow_kva[0]) << ','
        << csv::format_double(pre_attacked_flows[h].line_flow_kva[0]) << ','
        << csv::format_double(clean_price[h]) << ','
        << csv::format_double(attacked_price[h]) << '\n';
  }
  std::cout << out.str();
  fs::create_directories(cfg.out_dir);
  open_output(fs::path(cfg.out_dir) / "attack_impact.csv") << out.str();
}

void cmd_detect(const std::string& model_path,
                const std::string& scenario_path) {
  auto min = open_input(model_path, "model");
  model_io::SavedModel model = model_io::load_model(min);
  auto sin = open_input(scenario_path, "scenario");
  dataset::ScenarioDay day = dataset::read_scenario(sin);
  nn::Matrix x =
      dataset::apply_normalizer(model.normalizer, dataset::extract_features(day));
  double prob = model.kind == "lstm" ? nn::sequence_forward(x, model.lstm)
                                     : nn::mlp_forward(x, model.mlp);
  int decision = prob >= model.threshold ? 1 : 0;
  json j{{"schema", 1}, {"decision", decision}, {"probability", prob}};
  std::cout << j.dump() << "\n";
}

}  // namespace laa::cli
