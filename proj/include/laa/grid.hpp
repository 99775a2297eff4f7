#pragma once

#include <array>
#include <istream>
#include <set>
#include <utility>
#include <vector>

namespace laa::grid {

inline constexpr int kHours = 24;

struct LineSpec {
  int from_bus = 0;
  int to_bus = 0;
  double resistance_ohm = 0.0;
  double reactance_ohm = 0.0;
  double capacity_kva = 0.0;
};

struct NetworkModel {
  int bus_count = 0;
  std::vector<LineSpec> lines;  // bus_count - 1 branches, tree rooted at slack
  int slack_bus = 0;
  double base_voltage_kv = 0.0;
  double base_power_kva = 0.0;
  // Default loading from the bus table; index 0 is the slack (zero load).
  std::vector<double> default_p_kw;
  std::vector<double> default_q_kvar;

  // Reactive power tracks real power at each bus's default power factor.
  std::vector<double> q_for_load(const std::vector<double>& p_kw) const;
};

struct PowerFlowResult {
  std::vector<double> line_flow_kva;   // sending-end apparent power
  std::vector<double> line_real_kw;    // sending-end real power
  std::vector<double> bus_voltage_pu;  // magnitudes
  double total_loss_kw = 0.0;
  bool converged = false;
  int iterations = 0;
};

// Parses the branch table (from,to,r_ohm,x_ohm,capacity_kva) followed by the
// bus table (bus,p_kw,q_kvar). Verifies radiality: bus_count-1 branches, no
// duplicates, every bus reachable from the slack.
NetworkModel load_network(std::istream& source);

// Backward/forward sweep on the radial feeder. Loads are per-bus vectors of
// size bus_count with a zero slack entry; per-unit internally, results in
// kW/kVA. Stops when the largest voltage-magnitude change drops below
// 1e-6 pu, or after 100 sweeps with converged=false.
PowerFlowResult solve_power_flow(const NetworkModel& net,
                                 const std::vector<double>& load_kw,
                                 const std::vector<double>& load_kvar);

// (hour, line index) pairs where apparent flow strictly exceeds capacity.
std::set<std::pair<int, int>> congested_hours(
    const std::array<std::vector<double>, kHours>& flows_by_hour,
    const NetworkModel& net);

}  // namespace laa::grid
