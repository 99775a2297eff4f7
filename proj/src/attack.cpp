#include "laa/attack.hpp"

#include <algorithm>
#include <string>

#include "laa/errors.hpp"
#include "laa/rng.hpp"

namespace laa::attack {

namespace {

std::vector<int> targeted_hours(const AttackConfig& config) {
  if (config.hours.empty()) {
    std::vector<int> all(grid::kHours);
    for (int h = 0; h < grid::kHours; ++h) {
      all[static_cast<std::size_t>(h)] = h;
    }
    return all;
  }
  std::vector<int> hours = config.hours;
  std::sort(hours.begin(), hours.end());
  if (std::adjacent_find(hours.begin(), hours.end()) != hours.end()) {
    throw ConfigError("attack hours must be unique");
  }
  if (hours.front() < 0 || hours.back() >= grid::kHours) {
    throw ConfigError("attack hours must lie in [0, 24)");
  }
  return hours;
}

}  // namespace

market::LoadSchedule inject_laa(const market::LoadSchedule& schedule,
                                const market::AggregatorMap& map,
                                const AttackConfig& config) {
  if (config.compromised_aggregators.empty()) {
    throw ConfigError("attack needs at least one compromised aggregator");
  }
  if (config.gamma < 0.0 || config.gamma > 1.0) {
    throw ConfigError("gamma must lie in [0, 1]");
  }
  for (int a : config.compromised_aggregators) {
    if (a < 0 || a >= market::kAggregators) {
      throw ConfigError("unknown aggregator id " + std::to_string(a));
    }
  }
  const auto hours = targeted_hours(config);

  market::LoadSchedule out = schedule;
  Rng rng(config.seed);
  for (int a : config.compromised_aggregators) {
    std::set<int> buses;
    for (const auto& [bus, customer] : map.members[static_cast<std::size_t>(a)]) {
      buses.insert(bus);
    }
    for (int bus : buses) {
      if (bus < 0 || static_cast<std::size_t>(bus) >= schedule.p_kw.size()) {
        throw std::invalid_argument("schedule does not cover bus " +
                                    std::to_string(bus));
      }
      for (int h : hours) {
        const double delta = rng.uniform(0.0, config.gamma);
        auto& cell = out.p_kw[static_cast<std::size_t>(bus)]
                             [static_cast<std::size_t>(h)];
        cell = cell * (1.0 + delta);
      }
    }
  }
  return out;
}

}  // namespace laa::attack
