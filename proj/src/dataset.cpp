#include "laa/dataset.hpp"

#include <omp.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <exception>
#include <json.hpp>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <utility>

#include "laa/attack.hpp"
#include "laa/csv.hpp"
#include "laa/errors.hpp"
#include "laa/rng.hpp"

namespace laa::dataset {

namespace {

constexpr double kTempFloorC = -20.0;
constexpr double kTempCeilC = 15.0;
constexpr double kPriceFloor = 0.02;
constexpr double kPriceCeil = 0.12;
constexpr double kTwoPi = 6.283185307179586476925286766559;

std::string day_context(std::uint64_t master_seed, std::int64_t day_index) {
  return "day " + std::to_string(day_index) + " (seed " +
         std::to_string(master_seed) + "): ";
}

void require_feeder(const grid::NetworkModel& net) {
  if (net.bus_count != kLoadBuses + 1)
    throw ConfigError("scenario generator expects " +
                      std::to_string(kLoadBuses + 1) + " buses, network has " +
                      std::to_string(net.bus_count));
}

std::set<int> choose_compromised(std::uint64_t master_seed,
                                 std::int64_t day_index) {
  Rng rng(derive_seed(master_seed, SeedPurpose::AttackChoice, day_index));
  (void)rng.uniform01();  // the label draw, see draw_attack_flag
  int count = 1 + static_cast<int>(rng.uniform_int(2));
  std::set<int> ids;
  while (static_cast<int>(ids.size()) < count)
    ids.insert(static_cast<int>(rng.uniform_int(market::kAggregators)));
  return ids;
}

std::vector<grid::PowerFlowResult> solve_day_flows(
    const grid::NetworkModel& net, const market::LoadSchedule& schedule,
    const std::string& context) {
  std::vector<grid::PowerFlowResult> flows(grid::kHours);
  for (int h = 0; h < grid::kHours; ++h) {
    std::vector<double> p = schedule.bus_column(h);
    flows[h] = grid::solve_power_flow(net, p, net.q_for_load(p));
    if (!flows[h].converged)
      throw NumericError(context + "power flow diverged at hour " +
                         std::to_string(h));
  }
  return flows;
}

ScenarioDay assemble_scenario(const grid::NetworkModel& net,
                              const market::AggregatorMap& map,
                              const GeneratorConfig& cfg,
                              std::uint64_t master_seed,
                              std::int64_t day_index, bool attacked,
                              const CleanDay& today,
                              const std::array<const CleanDay*, 3>& history) {
  ScenarioDay day;
  day.date_index = day_index;
  day.label = attacked ? 1 : 0;
  day.outdoor_temp = today.outdoor_temp;
  day.prices = today.prices;

  const market::LoadSchedule* schedule = &today.schedule;
  const std::vector<grid::PowerFlowResult>* flows = &today.flows;
  market::LoadSchedule altered;
  std::vector<grid::PowerFlowResult> altered_flows;
  if (attacked) {
    attack::AttackConfig ac;
    ac.compromised_aggregators = choose_compromised(master_seed, day_index);
    ac.gamma = cfg.gamma;
    ac.seed = derive_seed(master_seed, SeedPurpose::AttackDelta, day_index);
    ac.hours = cfg.attack_hours;
    altered = attack::inject_laa(today.schedule, map, ac);
    altered_flows =
        solve_day_flows(net, altered, day_context(master_seed, day_index));
    schedule = &altered;
    flows = &altered_flows;
  }

  for (int h = 0; h < grid::kHours; ++h) {
    for (int b = 0; b < kLoadBuses; ++b)
      day.bus_load[h][b] = schedule->p_kw[b + 1][h];
    day.feeder_flow_kw[h] = (*flows)[h].line_real_kw[0];
  }
  for (int k = 0; k < 3; ++k)
    for (int h = 0; h < grid::kHours; ++h)
      for (int b = 0; b < kLoadBuses; ++b)
        day.history_load[k][h][b] = history[k]->schedule.p_kw[b + 1][h];
  return day;
}

}  // namespace

HourlyTemp generate_weather(const WeatherConfig& cfg, std::uint64_t master_seed,
                            std::int64_t day_index) {
  Rng rng(derive_seed(master_seed, SeedPurpose::Weather, day_index));
  double mean = rng.uniform(cfg.mean_low, cfg.mean_high);
  double amp = rng.uniform(cfg.amp_low, cfg.amp_high);
  HourlyTemp temp{};
  double ar = 0.0;
  for (int h = 0; h < grid::kHours; ++h) {
    ar = cfg.ar_phi * ar + cfg.ar_sigma * rng.normal();
    double sinusoid = -amp * std::cos(kTwoPi * (h - 6) / grid::kHours);
    temp[h] = std::clamp(mean + sinusoid + ar, kTempFloorC, kTempCeilC);
  }
  return temp;
}

market::HourlyPrice generate_prices(const PriceConfig& cfg,
                                    std::uint64_t master_seed,
                                    std::int64_t day_index) {
  Rng rng(derive_seed(master_seed, SeedPurpose::Prices, day_index));
  double floor = rng.uniform(cfg.floor_low, cfg.floor_high);
  double morning = rng.uniform(cfg.peak_low, cfg.peak_high);
  double evening = rng.uniform(cfg.peak_low, cfg.peak_high);
  double w2 = 2.0 * cfg.peak_width_hours * cfg.peak_width_hours;
  market::HourlyPrice price{};
  for (int h = 0; h < grid::kHours; ++h) {
    double p = floor + morning * std::exp(-(h - 8.0) * (h - 8.0) / w2) +
               evening * std::exp(-(h - 18.0) * (h - 18.0) / w2) +
               rng.uniform(-cfg.jitter, cfg.jitter);
    price[h] = std::clamp(p, kPriceFloor, kPriceCeil);
  }
  return price;
}

market::HourlyPrice ingest_prices(std::istream& in) {
  auto rows = csv::read_rows(in);
  std::size_t start = 0;
  if (!rows.empty() && !rows[0].fields.empty()) {
    const std::string& head = rows[0].fields[0];
    bool numeric = !head.empty() && (std::isdigit(static_cast<unsigned char>(
                                         head[0])) != 0 ||
                                     head[0] == '-' || head[0] == '+');
    if (!numeric) start = 1;
  }
  if (rows.size() - start != grid::kHours)
    throw ParseError("expected " + std::to_string(grid::kHours) +
                     " price rows, got " +
                     std::to_string(rows.size() - start));
  market::HourlyPrice price{};
  for (int h = 0; h < grid::kHours; ++h) {
    const csv::Row& row = rows[start + h];
    if (row.fields.size() != 2)
      throw ParseError("line " + std::to_string(row.line_no) +
                       ": expected hour,price");
    long hour = csv::parse_int(row.fields[0], row.line_no, "hour");
    if (hour != h)
      throw ParseError("line " + std::to_string(row.line_no) +
                       ": expected hour " + std::to_string(h));
    double p = csv::parse_double(row.fields[1], row.line_no, "price");
    if (!(p > 0.0) || !std::isfinite(p))
      throw ParseError("line " + std::to_string(row.line_no) +
                       ": price must be positive");
    price[h] = p;
  }
  return price;
}

market::Population day_population(const market::Population& pop,
                                  const GeneratorConfig& cfg,
                                  std::uint64_t master_seed,
                                  std::int64_t day_index) {
  market::Population out = pop;
  Rng noise(derive_seed(master_seed, SeedPurpose::BaseNoise, day_index));
  double global = noise.uniform(cfg.noise_low, cfg.noise_high);
  std::vector<double> bus_scale(kLoadBuses + 1, 1.0);
  for (int bus = 1; bus <= kLoadBuses; ++bus)
    bus_scale[bus] = global * noise.uniform(cfg.noise_low, cfg.noise_high);
  Rng day_rng(derive_seed(master_seed, SeedPurpose::ConsumerDay, day_index));
  for (auto& customer : out.customers) {
    for (double& kw : customer.base_kw) kw *= bus_scale[customer.bus];
    if (customer.is_lot)
      customer.vehicles =
          market::generate_lot_vehicles(cfg.population, day_rng.next_u64());
    else
      customer.prefs.initial_soc = day_rng.uniform(24.0, 26.0);
  }
  return out;
}

CleanDay simulate_clean_day(const grid::NetworkModel& net,
                            const market::Population& pop,
                            const market::AggregatorMap& map,
                            const GeneratorConfig& cfg,
                            std::uint64_t master_seed,
                            std::int64_t day_index) {
  require_feeder(net);
  CleanDay out;
  out.outdoor_temp = generate_weather(cfg.weather, master_seed, day_index);
  out.prices = generate_prices(cfg.prices, master_seed, day_index);
  market::Population day_pop = day_population(pop, cfg, master_seed, day_index);
  try {
    auto loop = market::dso_tariff_loop(net, day_pop, map, out.prices,
                                        out.outdoor_temp, cfg.tariff_step,
                                        cfg.max_rounds, cfg.threads);
    out.schedule = std::move(loop.schedule);
    out.flows = std::move(loop.flows);
    out.resolved = loop.resolved;
    out.all_feasible = loop.all_feasible;
  } catch (const NumericError& e) {
    throw NumericError(day_context(master_seed, day_index) + e.what());
  }
  return out;
}

bool draw_attack_flag(std::uint64_t master_seed, std::int64_t day_index) {
  Rng rng(derive_seed(master_seed, SeedPurpose::AttackChoice, day_index));
  return rng.uniform01() < 0.5;
}

ScenarioDay build_scenario(const grid::NetworkModel& net,
                           const market::Population& pop,
                           const market::AggregatorMap& map,
                           const GeneratorConfig& cfg,
                           std::uint64_t master_seed, std::int64_t day_index,
                           bool attacked) {
  require_feeder(net);
  CleanDay today = simulate_clean_day(net, pop, map, cfg, master_seed,
                                      day_index);
  std::array<CleanDay, 3> prior = {
      simulate_clean_day(net, pop, map, cfg, master_seed, day_index - 1),
      simulate_clean_day(net, pop, map, cfg, master_seed, day_index - 2),
      simulate_clean_day(net, pop, map, cfg, master_seed, day_index - 3)};
  return assemble_scenario(net, map, cfg, master_seed, day_index, attacked,
                           today, {&prior[0], &prior[1], &prior[2]});
}

std::vector<ScenarioDay> generate_days(const grid::NetworkModel& net,
                                       const GeneratorConfig& cfg,
                                       std::uint64_t master_seed, int count) {
  if (count <= 0) throw std::invalid_argument("day count must be positive");
  require_feeder(net);
  market::Population pop = market::generate_population(
      net, cfg.population, derive_seed(master_seed, SeedPurpose::Roster, 0));
  market::AggregatorMap map = market::AggregatorMap::build(pop);
  map.validate(net);

  std::vector<ScenarioDay> out(static_cast<std::size_t>(count));
  if (cfg.threads > 1 && count > 1) {
    std::exception_ptr first;
#pragma omp parallel for schedule(dynamic) num_threads(cfg.threads)
    for (int d = 0; d < count; ++d) {
      try {
        out[d] = build_scenario(net, pop, map, cfg, master_seed, d,
                                draw_attack_flag(master_seed, d));
      } catch (...) {
#pragma omp critical
        if (!first) first = std::current_exception();
      }
    }
    if (first) std::rethrow_exception(first);
    return out;
  }

  // Serial path: each clean day is simulated once and shared by the three
  // scenarios whose history references it. Map nodes are stable, so the
  // pointers survive later insertions.
  std::map<std::int64_t, CleanDay> cache;
  auto clean = [&](std::int64_t d) -> const CleanDay& {
    auto it = cache.find(d);
    if (it == cache.end())
      it = cache
               .emplace(d,
                        simulate_clean_day(net, pop, map, cfg, master_seed, d))
               .first;
    return it->second;
  };
  for (int d = 0; d < count; ++d) {
    const CleanDay& today = clean(d);
    std::array<const CleanDay*, 3> history = {&clean(d - 1), &clean(d - 2),
                                              &clean(d - 3)};
    out[d] = assemble_scenario(net, map, cfg, master_seed, d,
                               draw_attack_flag(master_seed, d), today,
                               history);
  }
  return out;
}

Eigen::MatrixXd extract_features(const ScenarioDay& day) {
  Eigen::MatrixXd x(grid::kHours, kFeatureCount);
  for (int h = 0; h < grid::kHours; ++h) {
    x(h, 0) = day.outdoor_temp[h];
    x(h, 1) = day.prices[h];
    for (int b = 0; b < kLoadBuses; ++b) x(h, 2 + b) = day.bus_load[h][b];
    for (int b = 0; b < kLoadBuses; ++b)
      x(h, 2 + kLoadBuses + b) =
          (day.history_load[0][h][b] + day.history_load[1][h][b] +
           day.history_load[2][h][b]) /
          3.0;
    x(h, kFeatureCount - 1) = day.feeder_flow_kw[h];
  }
  return x;
}

const std::vector<std::string>& feature_layout() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    n.emplace_back("outdoor_temp_c");
    n.emplace_back("price_usd_per_kwh");
    char buf[32];
    for (int b = 1; b <= kLoadBuses; ++b) {
      std::snprintf(buf, sizeof(buf), "bus_load_kw_%02d", b);
      n.emplace_back(buf);
    }
    for (int b = 1; b <= kLoadBuses; ++b) {
      std::snprintf(buf, sizeof(buf), "history_mean_kw_%02d", b);
      n.emplace_back(buf);
    }
    n.emplace_back("feeder_flow_kw");
    return n;
  }();
  return names;
}

std::uint64_t feature_layout_hash() {
  // FNV-1a over the version tag and the column names.
  std::uint64_t h = 14695981039346656037ULL;
  auto eat = [&h](char c) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  };
  for (char c : "v" + std::to_string(kFeatureLayoutVersion)) eat(c);
  for (const std::string& name : feature_layout()) {
    eat('|');
    for (char c : name) eat(c);
  }
  return h;
}

NormalizationStats fit_normalizer(const std::vector<Eigen::MatrixXd>& train) {
  if (train.empty())
    throw std::invalid_argument("normalizer needs a non-empty training set");
  const Eigen::Index cols = train.front().cols();
  NormalizationStats stats;
  stats.min.assign(static_cast<std::size_t>(cols),
                   std::numeric_limits<double>::infinity());
  stats.max.assign(static_cast<std::size_t>(cols),
                   -std::numeric_limits<double>::infinity());
  for (const Eigen::MatrixXd& seq : train) {
    if (seq.cols() != cols || seq.rows() == 0)
      throw std::invalid_argument("feature sequences disagree on shape");
    for (Eigen::Index c = 0; c < cols; ++c) {
      stats.min[c] = std::min(stats.min[c], seq.col(c).minCoeff());
      stats.max[c] = std::max(stats.max[c], seq.col(c).maxCoeff());
    }
  }
  return stats;
}

Eigen::MatrixXd apply_normalizer(const NormalizationStats& stats,
                                 const Eigen::MatrixXd& seq) {
  if (static_cast<std::size_t>(seq.cols()) != stats.min.size())
    throw std::invalid_argument("sequence width does not match normalizer");
  Eigen::MatrixXd out(seq.rows(), seq.cols());
  for (Eigen::Index c = 0; c < seq.cols(); ++c) {
    double lo = stats.min[c];
    double span = stats.max[c] - lo;
    for (Eigen::Index r = 0; r < seq.rows(); ++r)
      out(r, c) = span > 0.0 ? (seq(r, c) - lo) / span : 0.0;
  }
  return out;
}

SplitResult split_dataset(const std::vector<int>& labels, std::uint64_t seed) {
  const int n = static_cast<int>(labels.size());
  if (n < 10) throw std::invalid_argument("split needs at least 10 days");
  std::array<std::vector<int>, 2> by_label;
  for (int i = 0; i < n; ++i) {
    if (labels[i] != 0 && labels[i] != 1)
      throw std::invalid_argument("labels must be 0 or 1");
    by_label[labels[i]].push_back(i);
  }
  const int n0 = static_cast<int>(by_label[0].size());
  const int n1 = static_cast<int>(by_label[1].size());
  if (n0 < 2 || n1 < 2)
    throw DomainError("stratified split needs at least 2 days of each label");

  // The published 1550-day corpus splits 1200/350; otherwise 30% floor.
  const int test_total = (n == 1550) ? 350 : (n * 3) / 10;
  double e0 = test_total * static_cast<double>(n0) / n;
  double e1 = test_total * static_cast<double>(n1) / n;
  int t0 = static_cast<int>(e0);
  int t1 = static_cast<int>(e1);
  if (t0 + t1 < test_total) {
    // Largest remainder; ties go to the attacked class.
    if (e1 - t1 >= e0 - t0)
      ++t1;
    else
      ++t0;
  }
  // Keep both classes present on both sides.
  t0 = std::clamp(t0, 1, n0 - 1);
  t1 = std::clamp(test_total - t0, 1, n1 - 1);
  t0 = test_total - t1;
  if (t0 < 1 || t0 > n0 - 1)
    throw DomainError("cannot stratify split with these label counts");

  SplitResult split;
  const std::array<int, 2> take = {t0, t1};
  for (int label = 0; label < 2; ++label) {
    Rng rng(derive_seed(seed, SeedPurpose::Split, label));
    rng.shuffle(by_label[label]);
    for (std::size_t i = 0; i < by_label[label].size(); ++i) {
      if (i < static_cast<std::size_t>(take[label]))
        split.test.push_back(by_label[label][i]);
      else
        split.train.push_back(by_label[label][i]);
    }
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

namespace {

template <std::size_t N>
void read_fixed_array(const nlohmann::json& node, const char* what,
                      std::array<double, N>& out) {
  if (!node.is_array() || node.size() != N)
    throw ParseError(std::string(what) + ": expected " + std::to_string(N) +
                     " values");
  for (std::size_t i = 0; i < N; ++i) {
    if (!node[i].is_number())
      throw ParseError(std::string(what) + ": non-numeric entry");
    out[i] = node[i].get<double>();
  }
}

void read_bus_day(const nlohmann::json& node, const char* what,
                  BusLoadDay& out) {
  if (!node.is_array() || node.size() != grid::kHours)
    throw ParseError(std::string(what) + ": expected " +
                     std::to_string(grid::kHours) + " rows");
  for (int h = 0; h < grid::kHours; ++h)
    read_fixed_array(node[h], what, out[h]);
}

void require_nonnegative(const BusLoadDay& loads, const char* what) {
  for (const auto& row : loads)
    for (double v : row)
      if (!std::isfinite(v) || v < 0.0)
        throw ParseError(std::string(what) +
                         ": loads must be finite and non-negative");
}

}  // namespace

void write_scenario(const ScenarioDay& day, std::ostream& out) {
  nlohmann::json j;
  j["schema"] = 1;
  j["date_index"] = day.date_index;
  j["label"] = day.label;
  j["outdoor_temp"] = day.outdoor_temp;
  j["prices"] = day.prices;
  j["bus_load"] = day.bus_load;
  j["feeder_flow_kw"] = day.feeder_flow_kw;
  j["history_load"] = day.history_load;
  out << j.dump() << '\n';
}

ScenarioDay read_scenario(std::istream& in) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("scenario json: ") + e.what());
  }
  try {
    if (!j.is_object() || j.value("schema", -1) != 1)
      throw ParseError("scenario json: unsupported schema");
    ScenarioDay day;
    day.date_index = j.at("date_index").get<std::int64_t>();
    day.label = j.at("label").get<int>();
    if (day.label != 0 && day.label != 1)
      throw ParseError("scenario json: label must be 0 or 1");
    read_fixed_array(j.at("outdoor_temp"), "outdoor_temp", day.outdoor_temp);
    read_fixed_array(j.at("prices"), "prices", day.prices);
    read_fixed_array(j.at("feeder_flow_kw"), "feeder_flow_kw",
                     day.feeder_flow_kw);
    read_bus_day(j.at("bus_load"), "bus_load", day.bus_load);
    require_nonnegative(day.bus_load, "bus_load");
    const nlohmann::json& hist = j.at("history_load");
    if (!hist.is_array() || hist.size() != 3)
      throw ParseError("history_load: expected 3 days");
    for (int k = 0; k < 3; ++k) {
      read_bus_day(hist[k], "history_load", day.history_load[k]);
      require_nonnegative(day.history_load[k], "history_load");
    }
    return day;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("scenario json: ") + e.what());
  }
}

}  // namespace laa::dataset
