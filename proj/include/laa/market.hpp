#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <istream>
#include <ostream>
#include <vector>

#include "laa/grid.hpp"

namespace laa::market {

using HourlyKw = std::array<double, grid::kHours>;
using HourlyPrice = std::array<double, grid::kHours>;

inline constexpr int kAggregators = 9;

// Comfort band and charging window; SOC values are percentages.
struct ConsumerPrefs {
  double temp_low = 20.0;
  double temp_high = 23.0;
  double initial_soc = 25.0;
  double target_soc = 90.0;
  int ev_arrival = 16;
  int ev_departure = 22;
  bool has_ev = true;
  bool has_hp = true;
};

struct AssetSpec {
  double ev_capacity_kwh = 36.0;
  double ev_max_power_kw = 11.0;
  double ev_efficiency = 0.95;
  double hp_cop = 3.0;
  double hp_thermal_inertia = 0.9;  // fraction of indoor temp carried per hour
  double hp_max_power_kw = 6.0;
};

// Temperature gain per kW of heat delivered; sized so a 3 kW pump at COP 3
// holds 21 degC against -5 degC outdoors.
inline constexpr double kHpGainPerKwHeat = 26.0 / 9.0;

struct FlexResult {
  HourlyKw load_kw{};  // ev + hp
  HourlyKw ev_kw{};
  HourlyKw hp_kw{};
  bool feasible = true;
};

// Greedy cost minimization: the EV fills the cheapest window hours first,
// the heat pump buys the cheapest feasible hour (within a six-hour lookback)
// whenever the comfort floor would be crossed. Ties go to the earlier hour.
// Infeasible requirements are clamped to the closest achievable schedule and
// flagged rather than raised.
FlexResult optimize_consumer(const ConsumerPrefs& prefs,
                             const AssetSpec& assets,
                             const HourlyPrice& effective_price,
                             const std::array<double, grid::kHours>& outdoor_temp);

// One fast-charging visitor; dwell windows stay within the day.
struct LotVehicle {
  double initial_soc = 25.0;
  double target_soc = 80.0;
  int arrival = 9;
  int departure = 12;
};

HourlyKw optimize_lot(const std::vector<LotVehicle>& vehicles,
                      const AssetSpec& assets, const HourlyPrice& price,
                      bool* all_feasible);

// A customer is either a household (base share + EV + HP) or a charging lot
// (base share + per-day vehicle roster filled in by the caller).
struct Customer {
  int id = 0;
  int bus = 0;
  int aggregator = 0;
  bool is_lot = false;
  ConsumerPrefs prefs;
  HourlyKw base_kw{};
  std::vector<LotVehicle> vehicles;
};

struct Population {
  std::vector<Customer> customers;
  AssetSpec residential;
  AssetSpec lot;
};

struct PopulationConfig {
  double kw_per_home = 20.0;
  double target_soc_low = 85.0;
  double target_soc_high = 95.0;
  AssetSpec residential{};
  AssetSpec lot{36.0, 50.0, 0.95, 3.0, 0.9, 6.0};
};

// Fixed daily profile scaling the feeder's default loading; peak 1.0 at noon
// with a secondary evening shoulder.
const HourlyKw& base_day_shape();

// Bus partition: 0..5 residential blocks, 6 and 7 the commercial lot buses
// (23 and 24), 8 the feeder tail.
int aggregator_for_bus(int bus);

// Seeded roster: one customer per estimated home on every residential load
// bus, one lot customer on each commercial bus. Base load splits the bus
// default evenly across that bus's customers.
Population generate_population(const grid::NetworkModel& net,
                               const PopulationConfig& cfg,
                               std::uint64_t seed);

// Day-specific lot occupancy (count, windows and SOC needs).
std::vector<LotVehicle> generate_lot_vehicles(const PopulationConfig& cfg,
                                              std::uint64_t seed);

struct AggregatorMap {
  // aggregator -> (bus, customer index) pairs
  std::array<std::vector<std::pair<int, int>>, kAggregators> members;

  static AggregatorMap build(const Population& pop);
  // Every load bus covered exactly once, lot buses owned by aggregators 6/7.
  void validate(const grid::NetworkModel& net) const;
};

struct LoadSchedule {
  std::vector<HourlyKw> p_kw;  // [bus][hour], slack row all zero

  double total_at(int hour) const;
  std::vector<double> bus_column(int hour) const;
};

LoadSchedule aggregate_schedules(const std::vector<HourlyKw>& flexible,
                                 const std::vector<HourlyKw>& base,
                                 const AggregatorMap& map, int bus_count);

struct TariffProfile {
  HourlyPrice base_price{};
  HourlyPrice tariff{};

  HourlyPrice effective() const;
};

struct TariffLoopResult {
  TariffProfile tariff;
  LoadSchedule schedule;
  std::vector<grid::PowerFlowResult> flows;  // one per hour
  bool resolved = false;
  bool all_feasible = true;
  int rounds = 0;
  // Feeder-total kW per hour after each round, for relief diagnostics.
  std::vector<HourlyKw> round_totals;
  // Hours whose tariff was stepped after round r (absent for the last round).
  std::vector<std::array<bool, grid::kHours>> round_tariffed;
  std::array<bool, grid::kHours> ever_congested{};
  std::vector<FlexResult> flexible;  // final per-customer schedules
};

// Day-ahead clearing: solve the 24 hourly flows, raise the tariff by `step`
// at every congested hour, let consumers re-optimize, and repeat until clean
// or max_rounds. `post_clearing` (when set) edits the aggregated schedule
// before the flows are solved, which models load alteration the clearing
// cannot see.
TariffLoopResult dso_tariff_loop(
    const grid::NetworkModel& net, const Population& pop,
    const AggregatorMap& map, const HourlyPrice& base_price,
    const std::array<double, grid::kHours>& outdoor_temp, double step,
    int max_rounds, int threads = 1,
    const std::function<void(LoadSchedule&)>& post_clearing = {});

// Roster round-trip; prefs and base profiles survive exactly.
void dump_roster(const Population& pop, std::ostream& out);
Population load_roster(std::istream& in, const PopulationConfig& cfg);

}  // namespace laa::market
