#include "laa/market.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include "laa/csv.hpp"
#include "laa/errors.hpp"
#include "laa/rng.hpp"

namespace laa::market {

namespace {

constexpr int kH = grid::kHours;
constexpr int kHpLookback = 6;

void check_prices(const HourlyPrice& price) {
  for (int h = 0; h < kH; ++h) {
    if (!(price[h] > 0.0)) {
      throw std::invalid_argument("prices must be positive at every hour");
    }
  }
}

// Window hours ordered by (price, hour); the fill order the greedy uses.
std::vector<int> price_order(const HourlyPrice& price, int first, int last) {
  std::vector<int> hours;
  for (int h = first; h < last; ++h) {
    hours.push_back(h);
  }
  std::stable_sort(hours.begin(), hours.end(), [&price](int a, int b) {
    return price[a] < price[b];
  });
  return hours;
}

// Greedy charge: cheapest window hours first, capped at max power, until the
// battery need is met. Returns false when the window cannot deliver it.
bool fill_battery(double initial_soc, double target_soc, double capacity_kwh,
                  double max_power_kw, double efficiency,
                  const HourlyPrice& price, int arrival, int departure,
                  HourlyKw* load) {
  double needed_kwh =
      std::max(0.0, (target_soc - initial_soc) / 100.0 * capacity_kwh);
  if (needed_kwh <= 0.0) {
    return true;
  }
  for (int h : price_order(price, arrival, departure)) {
    if (needed_kwh <= 1e-12) {
      break;
    }
    const double grid_kw = std::min(max_power_kw, needed_kwh / efficiency);
    (*load)[h] += grid_kw;
    needed_kwh -= grid_kw * efficiency;
  }
  return needed_kwh <= 1e-9;
}

}  // namespace

const HourlyKw& base_day_shape() {
  static const HourlyKw shape = {
      0.58, 0.55, 0.53, 0.52, 0.52, 0.54, 0.62, 0.72, 0.80, 0.88, 0.94, 0.98,
      1.00, 0.97, 0.92, 0.88, 0.86, 0.90, 0.95, 0.93, 0.85, 0.75, 0.68, 0.62};
  return shape;
}

int aggregator_for_bus(int bus) {
  if (bus >= 1 && bus <= 5) return 0;
  if (bus >= 6 && bus <= 7) return 1;
  if (bus >= 8 && bus <= 13) return 2;
  if (bus >= 14 && bus <= 19) return 3;
  if ((bus >= 20 && bus <= 22) || bus == 25 || bus == 26) return 4;
  if (bus >= 27 && bus <= 29) return 5;
  if (bus == 23) return 6;
  if (bus == 24) return 7;
  if (bus >= 30 && bus <= 32) return 8;
  throw ConfigError("bus " + std::to_string(bus) + " has no aggregator");
}

FlexResult optimize_consumer(const ConsumerPrefs& prefs,
                             const AssetSpec& assets,
                             const HourlyPrice& effective_price,
                             const std::array<double, kH>& outdoor_temp) {
  check_prices(effective_price);
  FlexResult out;

  if (prefs.has_ev) {
    if (prefs.ev_arrival < 0 || prefs.ev_arrival >= prefs.ev_departure ||
        prefs.ev_departure > kH) {
      throw std::invalid_argument("charging window must satisfy 0 <= arrival < departure <= 24");
    }
    out.feasible = fill_battery(prefs.initial_soc, prefs.target_soc,
                                assets.ev_capacity_kwh, assets.ev_max_power_kw,
                                assets.ev_efficiency, effective_price,
                                prefs.ev_arrival, prefs.ev_departure,
                                &out.ev_kw) &&
                   out.feasible;
  }

  if (prefs.has_hp) {
    // First-order room model, Markov in the indoor temperature, so capping
    // the computed prefix at temp_high is enough to cap the whole day.
    const double a = assets.hp_thermal_inertia;
    const double gain = kHpGainPerKwHeat * assets.hp_cop;
    std::array<double, kH + 1> temp{};
    temp[0] = prefs.temp_low;
    auto advance = [&](int t) {
      temp[t + 1] =
          a * temp[t] + (1.0 - a) * (outdoor_temp[t] + gain * out.hp_kw[t]);
    };
    for (int t = 0; t < kH; ++t) {
      advance(t);
      while (temp[t + 1] < prefs.temp_low - 1e-9) {
        const int first = std::max(0, t - (kHpLookback - 1));
        // Heat bought at s decays by a^(t-s) before the deficit hour, so
        // rank candidates by price per delivered degree.
        std::vector<int> candidates;
        for (int s = first; s <= t; ++s) {
          candidates.push_back(s);
        }
        std::stable_sort(candidates.begin(), candidates.end(),
                         [&](int lhs, int rhs) {
                           return effective_price[lhs] / std::pow(a, t - lhs) <
                                  effective_price[rhs] / std::pow(a, t - rhs);
                         });
        int pick = -1;
        double pick_room = 0.0;
        for (int s : candidates) {
          const double headroom = assets.hp_max_power_kw - out.hp_kw[s];
          if (headroom <= 1e-12) {
            continue;
          }
          // Temperature gain at hour u per added kW at hour s.
          double cap = headroom;
          for (int u = s + 1; u <= t + 1; ++u) {
            const double coef =
                std::pow(a, u - 1 - s) * (1.0 - a) * gain;
            cap = std::min(cap, (prefs.temp_high - temp[u]) / coef);
          }
          if (cap > 1e-12) {
            pick = s;
            pick_room = cap;
            break;
          }
        }
        if (pick < 0) {
          out.feasible = false;
          break;
        }
        const double coef_end =
            std::pow(a, t - pick) * (1.0 - a) * gain;
        const double wanted = (prefs.temp_low - temp[t + 1]) / coef_end;
        out.hp_kw[pick] += std::min(wanted, pick_room);
        for (int u = pick; u <= t; ++u) {
          advance(u);
        }
      }
    }
  }

  for (int h = 0; h < kH; ++h) {
    out.load_kw[h] = out.ev_kw[h] + out.hp_kw[h];
  }
  return out;
}

HourlyKw optimize_lot(const std::vector<LotVehicle>& vehicles,
                      const AssetSpec& assets, const HourlyPrice& price,
                      bool* all_feasible) {
  check_prices(price);
  HourlyKw load{};
  bool ok = true;
  for (const auto& v : vehicles) {
    if (v.arrival < 0 || v.arrival >= v.departure || v.departure > kH) {
      throw std::invalid_argument("charging window must satisfy 0 <= arrival < departure <= 24");
    }
    ok = fill_battery(v.initial_soc, v.target_soc, assets.ev_capacity_kwh,
                      assets.ev_max_power_kw, assets.ev_efficiency, price,
                      v.arrival, v.departure, &load) &&
         ok;
  }
  if (all_feasible != nullptr) {
    *all_feasible = ok;
  }
  return load;
}

Population generate_population(const grid::NetworkModel& net,
                               const PopulationConfig& cfg,
                               std::uint64_t seed) {
  if (cfg.kw_per_home <= 0.0) {
    throw ConfigError("kw_per_home must be positive");
  }
  Population pop;
  pop.residential = cfg.residential;
  pop.lot = cfg.lot;
  Rng rng(seed);
  int next_id = 0;
  for (int bus = 1; bus < net.bus_count; ++bus) {
    const int agg = aggregator_for_bus(bus);
    const bool lot_bus = agg == 6 || agg == 7;
    if (lot_bus) {
      Customer c;
      c.id = next_id++;
      c.bus = bus;
      c.aggregator = agg;
      c.is_lot = true;
      for (int h = 0; h < kH; ++h) {
        c.base_kw[h] = net.default_p_kw[bus] * base_day_shape()[h];
      }
      pop.customers.push_back(std::move(c));
      continue;
    }
    const int homes = std::max(
        1, static_cast<int>(std::lround(net.default_p_kw[bus] / cfg.kw_per_home)));
    const double share = net.default_p_kw[bus] / homes;
    for (int k = 0; k < homes; ++k) {
      Customer c;
      c.id = next_id++;
      c.bus = bus;
      c.aggregator = agg;
      c.prefs.temp_low = rng.uniform(18.0, 20.5);
      c.prefs.temp_high = rng.uniform(c.prefs.temp_low + 1.0, c.prefs.temp_low + 2.0);
      c.prefs.initial_soc = rng.uniform(20.0, 30.0);
      c.prefs.target_soc =
          rng.uniform(cfg.target_soc_low, cfg.target_soc_high);
      c.prefs.ev_arrival = 15 + static_cast<int>(rng.uniform_int(4));
      c.prefs.ev_departure = 21 + static_cast<int>(rng.uniform_int(3));
      for (int h = 0; h < kH; ++h) {
        c.base_kw[h] = share * base_day_shape()[h];
      }
      pop.customers.push_back(std::move(c));
    }
  }
  return pop;
}

std::vector<LotVehicle> generate_lot_vehicles(const PopulationConfig&,
                                              std::uint64_t seed) {
  Rng rng(seed);
  // Commuter traffic keeps weekday occupancy regular; the draw jitters a
  // stable fleet rather than resampling it.
  const int count = 22 + static_cast<int>(rng.uniform_int(5));
  std::vector<LotVehicle> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    LotVehicle v;
    v.arrival = 8 + static_cast<int>(rng.uniform_int(8));
    v.departure = v.arrival + 2 + static_cast<int>(rng.uniform_int(3));
    v.initial_soc = rng.uniform(22.0, 28.0);
    v.target_soc = rng.uniform(75.0, 85.0);
    out.push_back(v);
  }
  return out;
}

AggregatorMap AggregatorMap::build(const Population& pop) {
  AggregatorMap map;
  for (std::size_t k = 0; k < pop.customers.size(); ++k) {
    const auto& c = pop.customers[k];
    if (c.aggregator < 0 || c.aggregator >= kAggregators) {
      throw ConfigError("customer " + std::to_string(c.id) +
                        " names aggregator " + std::to_string(c.aggregator));
    }
    map.members[static_cast<std::size_t>(c.aggregator)].emplace_back(
        c.bus, static_cast<int>(k));
  }
  return map;
}

void AggregatorMap::validate(const grid::NetworkModel& net) const {
  std::vector<int> owner(static_cast<std::size_t>(net.bus_count), -1);
  for (int a = 0; a < kAggregators; ++a) {
    for (const auto& [bus, customer] : members[static_cast<std::size_t>(a)]) {
      if (bus < 1 || bus >= net.bus_count) {
        throw ConfigError("customer " + std::to_string(customer) +
                          " mapped to unknown bus " + std::to_string(bus));
      }
      auto& slot = owner[static_cast<std::size_t>(bus)];
      if (slot >= 0 && slot != a) {
        throw ConfigError("bus " + std::to_string(bus) +
                          " split across aggregators");
      }
      slot = a;
    }
  }
  for (int bus = 1; bus < net.bus_count; ++bus) {
    if (owner[static_cast<std::size_t>(bus)] < 0) {
      throw ConfigError("bus " + std::to_string(bus) + " has no aggregator");
    }
  }
  if (owner[23] != 6 || owner[24] != 7) {
    throw ConfigError("lot buses must belong to aggregators 6 and 7");
  }
}

double LoadSchedule::total_at(int hour) const {
  double sum = 0.0;
  for (const auto& row : p_kw) {
    sum += row[static_cast<std::size_t>(hour)];
  }
  return sum;
}

std::vector<double> LoadSchedule::bus_column(int hour) const {
  std::vector<double> col(p_kw.size(), 0.0);
  for (std::size_t b = 0; b < p_kw.size(); ++b) {
    col[b] = p_kw[b][static_cast<std::size_t>(hour)];
  }
  return col;
}

LoadSchedule aggregate_schedules(const std::vector<HourlyKw>& flexible,
                                 const std::vector<HourlyKw>& base,
                                 const AggregatorMap& map, int bus_count) {
  if (flexible.size() != base.size()) {
    throw std::invalid_argument("flexible and base customer counts differ");
  }
  LoadSchedule schedule;
  schedule.p_kw.assign(static_cast<std::size_t>(bus_count), HourlyKw{});
  for (const auto& agg : map.members) {
    for (const auto& [bus, customer] : agg) {
      if (bus < 1 || bus >= bus_count) {
        throw ConfigError("customer " + std::to_string(customer) +
                          " mapped to unknown bus " + std::to_string(bus));
      }
      if (customer < 0 ||
          static_cast<std::size_t>(customer) >= flexible.size()) {
        throw ConfigError("customer " + std::to_string(customer) +
                          " has no schedule");
      }
      const auto& f = flexible[static_cast<std::size_t>(customer)];
      const auto& b = base[static_cast<std::size_t>(customer)];
      for (int h = 0; h < kH; ++h) {
        if (f[h] < 0.0 || b[h] < 0.0) {
          throw std::invalid_argument("load schedules must be non-negative");
        }
        schedule.p_kw[static_cast<std::size_t>(bus)][h] += f[h] + b[h];
      }
    }
  }
  return schedule;
}

HourlyPrice TariffProfile::effective() const {
  HourlyPrice out{};
  for (int h = 0; h < kH; ++h) {
    out[h] = base_price[h] + tariff[h];
  }
  return out;
}

TariffLoopResult dso_tariff_loop(
    const grid::NetworkModel& net, const Population& pop,
    const AggregatorMap& map, const HourlyPrice& base_price,
    const std::array<double, kH>& outdoor_temp, double step, int max_rounds,
    int threads, const std::function<void(LoadSchedule&)>& post_clearing) {
  if (step <= 0.0 || max_rounds < 1) {
    throw ConfigError("tariff step must be positive and max_rounds >= 1");
  }
  map.validate(net);

  TariffLoopResult result;
  result.tariff.base_price = base_price;
  const std::size_t n = pop.customers.size();
  std::vector<HourlyKw> base(n);
  for (std::size_t k = 0; k < n; ++k) {
    base[k] = pop.customers[k].base_kw;
  }

  for (int round = 1; round <= max_rounds; ++round) {
    result.rounds = round;
    const HourlyPrice price = result.tariff.effective();

    result.flexible.assign(n, FlexResult{});
    auto solve_customer = [&](std::size_t k) {
      const auto& c = pop.customers[k];
      if (c.is_lot) {
        bool ok = true;
        result.flexible[k].load_kw =
            optimize_lot(c.vehicles, pop.lot, price, &ok);
        result.flexible[k].ev_kw = result.flexible[k].load_kw;
        result.flexible[k].feasible = ok;
      } else {
        result.flexible[k] =
            optimize_consumer(c.prefs, pop.residential, price, outdoor_temp);
      }
    };
    if (threads > 1) {
#pragma omp parallel for schedule(static) num_threads(threads)
      for (std::int64_t k = 0; k < static_cast<std::int64_t>(n); ++k) {
        solve_customer(static_cast<std::size_t>(k));
      }
    } else {
      for (std::size_t k = 0; k < n; ++k) {
        solve_customer(k);
      }
    }
    result.all_feasible = true;
    for (const auto& f : result.flexible) {
      result.all_feasible = result.all_feasible && f.feasible;
    }

    std::vector<HourlyKw> flex(n);
    for (std::size_t k = 0; k < n; ++k) {
      flex[k] = result.flexible[k].load_kw;
    }
    result.schedule = aggregate_schedules(flex, base, map, net.bus_count);
    if (post_clearing) {
      post_clearing(result.schedule);
    }

    result.flows.clear();
    std::array<std::vector<double>, kH> flows_by_hour;
    HourlyKw totals{};
    for (int h = 0; h < kH; ++h) {
      const auto load = result.schedule.bus_column(h);
      auto pf = grid::solve_power_flow(net, load, net.q_for_load(load));
      if (!pf.converged) {
        throw NumericError("power flow did not converge at hour " +
                           std::to_string(h) + " in round " +
                           std::to_string(round));
      }
      flows_by_hour[h] = pf.line_flow_kva;
      totals[h] = result.schedule.total_at(h);
      result.flows.push_back(std::move(pf));
    }
    result.round_totals.push_back(totals);

    const auto congested = grid::congested_hours(flows_by_hour, net);
    if (congested.empty()) {
      result.resolved = true;
      break;
    }
    // One step per hour per round, however many lines are over.
    std::set<int> hours;
    for (const auto& [hour, line] : congested) {
      hours.insert(hour);
      result.ever_congested[static_cast<std::size_t>(hour)] = true;
    }
    if (round == max_rounds) {
      result.resolved = false;
      break;
    }
    std::array<bool, kH> stepped{};
    for (int hour : hours) {
      result.tariff.tariff[static_cast<std::size_t>(hour)] += step;
      stepped[static_cast<std::size_t>(hour)] = true;
    }
    result.round_tariffed.push_back(stepped);
  }
  return result;
}

void dump_roster(const Population& pop, std::ostream& out) {
  out << "id,bus,aggregator,is_lot,temp_low,temp_high,initial_soc,target_soc,"
         "ev_arrival,ev_departure";
  for (int h = 0; h < kH; ++h) {
    out << ",base_" << h;
  }
  out << "\n";
  for (const auto& c : pop.customers) {
    out << c.id << ',' << c.bus << ',' << c.aggregator << ','
        << (c.is_lot ? 1 : 0) << ',' << csv::format_double(c.prefs.temp_low)
        << ',' << csv::format_double(c.prefs.temp_high) << ','
        << csv::format_double(c.prefs.initial_soc) << ','
        << csv::format_double(c.prefs.target_soc) << ',' << c.prefs.ev_arrival
        << ',' << c.prefs.ev_departure;
    for (int h = 0; h < kH; ++h) {
      out << ',' << csv::format_double(c.base_kw[h]);
    }
    out << "\n";
  }
}

Population load_roster(std::istream& in, const PopulationConfig& cfg) {
  Population pop;
  pop.residential = cfg.residential;
  pop.lot = cfg.lot;
  const auto rows = csv::read_rows(in);
  if (rows.empty()) {
    throw ParseError("roster is empty");
  }
  const std::size_t expected = 10 + kH;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.fields.size() != expected) {
      throw ParseError("roster line " + std::to_string(row.line_no) +
                       " has " + std::to_string(row.fields.size()) +
                       " fields, expected " + std::to_string(expected));
    }
    Customer c;
    c.id = static_cast<int>(csv::parse_int(row.fields[0], row.line_no, "id"));
    c.bus = static_cast<int>(csv::parse_int(row.fields[1], row.line_no, "bus"));
    c.aggregator =
        static_cast<int>(csv::parse_int(row.fields[2], row.line_no, "aggregator"));
    c.is_lot = csv::parse_int(row.fields[3], row.line_no, "is_lot") != 0;
    c.prefs.temp_low =
        csv::parse_double(row.fields[4], row.line_no, "temp_low");
    c.prefs.temp_high =
        csv::parse_double(row.fields[5], row.line_no, "temp_high");
    c.prefs.initial_soc =
        csv::parse_double(row.fields[6], row.line_no, "initial_soc");
    c.prefs.target_soc =
        csv::parse_double(row.fields[7], row.line_no, "target_soc");
    c.prefs.ev_arrival =
        static_cast<int>(csv::parse_int(row.fields[8], row.line_no, "ev_arrival"));
    c.prefs.ev_departure = static_cast<int>(
        csv::parse_int(row.fields[9], row.line_no, "ev_departure"));
    for (int h = 0; h < kH; ++h) {
      c.base_kw[h] = csv::parse_double(
          row.fields[10 + static_cast<std::size_t>(h)], row.line_no, "base_kw");
    }
    pop.customers.push_back(std::move(c));
  }
  return pop;
}

}  // namespace laa::market
