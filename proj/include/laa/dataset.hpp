#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "laa/grid.hpp"
#include "laa/market.hpp"

namespace laa::dataset {

inline constexpr int kLoadBuses = 32;
inline constexpr int kFeatureCount = 67;  // temp, price, 32 loads, 32 history means, feeder flow
inline constexpr int kFeatureLayoutVersion = 1;

using HourlyTemp = std::array<double, grid::kHours>;
using BusLoadDay = std::array<std::array<double, kLoadBuses>, grid::kHours>;

// Winter profile: seeded daily mean plus a sinusoid bottoming at 06:00 plus
// AR(1) noise.
struct WeatherConfig {
  double mean_low = -10.0;
  double mean_high = 5.0;
  double amp_low = 3.0;
  double amp_high = 5.0;
  double ar_sigma = 0.5;
  double ar_phi = 0.8;
};

HourlyTemp generate_weather(const WeatherConfig& cfg, std::uint64_t master_seed,
                            std::int64_t day_index);

// Double-peak day-ahead prices with morning and evening humps.
struct PriceConfig {
  double floor_low = 0.025;
  double floor_high = 0.035;
  double peak_low = 0.03;
  double peak_high = 0.06;
  double peak_width_hours = 2.2;
  double jitter = 0.002;
};

market::HourlyPrice generate_prices(const PriceConfig& cfg,
                                    std::uint64_t master_seed,
                                    std::int64_t day_index);

// CSV `hour,price_usd_per_kwh`, 24 data rows, hours 0..23 in order.
market::HourlyPrice ingest_prices(std::istream& in);

// One simulated day as the operator observes it: post-attack loads when the
// day is attacked, plus three strictly earlier clean days of context.
struct ScenarioDay {
  std::int64_t date_index = 0;
  int label = 0;
  HourlyTemp outdoor_temp{};
  market::HourlyPrice prices{};
  BusLoadDay bus_load{};
  std::array<double, grid::kHours> feeder_flow_kw{};
  std::array<BusLoadDay, 3> history_load{};  // day-1, day-2, day-3
};

struct GeneratorConfig {
  double gamma = 0.1;
  std::vector<int> attack_hours;  // empty targets the whole day
  double tariff_step = 0.005;
  int max_rounds = 20;
  int threads = 1;
  double noise_low = 0.99;   // per-day demand scale, global and per bus
  double noise_high = 1.01;
  WeatherConfig weather;
  PriceConfig prices;
  market::PopulationConfig population;
};

// Per-day copy of the roster: demand wobble (one global scale, one per load
// bus), fresh EV state of charge per household, fresh lot occupancy.
market::Population day_population(const market::Population& pop,
                                  const GeneratorConfig& cfg,
                                  std::uint64_t master_seed,
                                  std::int64_t day_index);

// Market outcome of one attack-free day.
struct CleanDay {
  HourlyTemp outdoor_temp{};
  market::HourlyPrice prices{};
  market::LoadSchedule schedule;
  std::vector<grid::PowerFlowResult> flows;
  bool resolved = false;
  bool all_feasible = true;
};

CleanDay simulate_clean_day(const grid::NetworkModel& net,
                            const market::Population& pop,
                            const market::AggregatorMap& map,
                            const GeneratorConfig& cfg,
                            std::uint64_t master_seed, std::int64_t day_index);

// Dataset-level coin flip for the day's label; build_scenario consumes the
// same stream, so forcing the flag still leaves every other draw unchanged.
bool draw_attack_flag(std::uint64_t master_seed, std::int64_t day_index);

ScenarioDay build_scenario(const grid::NetworkModel& net,
                           const market::Population& pop,
                           const market::AggregatorMap& map,
                           const GeneratorConfig& cfg,
                           std::uint64_t master_seed, std::int64_t day_index,
                           bool attacked);

// Days 0..count-1 with seeded 50/50 labels. The serial path reuses each
// clean day across the three histories that reference it; the parallel path
// recomputes them per day. Both yield bit-identical scenarios.
std::vector<ScenarioDay> generate_days(const grid::NetworkModel& net,
                                       const GeneratorConfig& cfg,
                                       std::uint64_t master_seed, int count);

// Raw (unnormalized) 24 x 67 sequence in the documented column order.
Eigen::MatrixXd extract_features(const ScenarioDay& day);

const std::vector<std::string>& feature_layout();
std::uint64_t feature_layout_hash();

struct NormalizationStats {
  std::vector<double> min;  // per feature column
  std::vector<double> max;
};

// Min-max over every row of every training sequence. Constant columns map
// to 0; out-of-range inputs extrapolate rather than clip.
NormalizationStats fit_normalizer(const std::vector<Eigen::MatrixXd>& train);
Eigen::MatrixXd apply_normalizer(const NormalizationStats& stats,
                                 const Eigen::MatrixXd& seq);

struct SplitResult {
  std::vector<int> train;  // indices into the input order
  std::vector<int> test;
};

// Label-stratified seeded split. Test share is 30% rounded down, except the
// 1550-day case which pins the published 1200/350 counts.
SplitResult split_dataset(const std::vector<int>& labels, std::uint64_t seed);

void write_scenario(const ScenarioDay& day, std::ostream& out);
ScenarioDay read_scenario(std::istream& in);

}  // namespace laa::dataset
