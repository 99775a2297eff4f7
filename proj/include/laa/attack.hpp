#pragma once

#include <cstdint>
#include <set>
#include <vector>

#include "laa/market.hpp"

namespace laa::attack {

struct AttackConfig {
  std::set<int> compromised_aggregators;
  double gamma = 0.1;
  std::uint64_t seed = 0;
  // Targeted hours; empty means the whole day.
  std::vector<int> hours;
};

// Scales each compromised bus-hour entry by (1 + delta), delta drawn
// uniformly from [0, gamma]. Draw order is fixed: aggregator id ascending,
// bus ascending within it, hour ascending; one draw per bus-hour whether or
// not the entry is zero. Everything else is copied bit for bit.
market::LoadSchedule inject_laa(const market::LoadSchedule& schedule,
                                const market::AggregatorMap& map,
                                const AttackConfig& config);

}  // namespace laa::attack
