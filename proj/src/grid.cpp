#include "laa/grid.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include "laa/csv.hpp"
#include "laa/errors.hpp"

namespace laa::grid {

namespace {

bool is_branch_header(const std::vector<std::string>& f) {
  return f.size() == 5 && f[0] == "from" && f[1] == "to" && f[2] == "r_ohm" &&
         f[3] == "x_ohm" && f[4] == "capacity_kva";
}

bool is_bus_header(const std::vector<std::string>& f) {
  return f.size() == 3 && f[0] == "bus" && f[1] == "p_kw" && f[2] == "q_kvar";
}

}  // namespace

std::vector<double> NetworkModel::q_for_load(
    const std::vector<double>& p_kw) const {
  std::vector<double> q(p_kw.size(), 0.0);
  for (std::size_t i = 0; i < p_kw.size(); ++i) {
    if (default_p_kw[i] > 0.0)
      q[i] = p_kw[i] * (default_q_kvar[i] / default_p_kw[i]);
  }
  return q;
}

NetworkModel load_network(std::istream& source) {
  auto rows = csv::read_rows(source);
  if (rows.empty() || !is_branch_header(rows[0].fields))
    throw ParseError("line 1: expected header from,to,r_ohm,x_ohm,capacity_kva");

  NetworkModel net;
  std::size_t i = 1;
  for (; i < rows.size() && !is_bus_header(rows[i].fields); ++i) {
    const auto& r = rows[i];
    if (r.fields.size() != 5)
      throw ParseError("line " + std::to_string(r.line_no) +
                       ": branch row needs 5 fields");
    LineSpec line;
    line.from_bus = static_cast<int>(csv::parse_int(r.fields[0], r.line_no, "from"));
    line.to_bus = static_cast<int>(csv::parse_int(r.fields[1], r.line_no, "to"));
    line.resistance_ohm = csv::parse_double(r.fields[2], r.line_no, "r_ohm");
    line.reactance_ohm = csv::parse_double(r.fields[3], r.line_no, "x_ohm");
    line.capacity_kva = csv::parse_double(r.fields[4], r.line_no, "capacity_kva");
    if (line.from_bus == line.to_bus)
      throw ParseError("line " + std::to_string(r.line_no) +
                       ": branch endpoints coincide");
    if (line.resistance_ohm < 0.0 || line.reactance_ohm < 0.0 ||
        line.capacity_kva <= 0.0)
      throw ParseError("line " + std::to_string(r.line_no) +
                       ": impedance must be >= 0 and capacity > 0");
    net.lines.push_back(line);
  }
  if (i >= rows.size())
    throw ParseError("missing bus table header bus,p_kw,q_kvar");
  ++i;  // skip bus header
  for (; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.fields.size() != 3)
      throw ParseError("line " + std::to_string(r.line_no) +
                       ": bus row needs 3 fields");
    int bus = static_cast<int>(csv::parse_int(r.fields[0], r.line_no, "bus"));
    double p = csv::parse_double(r.fields[1], r.line_no, "p_kw");
    double q = csv::parse_double(r.fields[2], r.line_no, "q_kvar");
    if (bus != static_cast<int>(net.default_p_kw.size()))
      throw ParseError("line " + std::to_string(r.line_no) +
                       ": bus rows must be 0..n-1 in order");
    net.default_p_kw.push_back(p);
    net.default_q_kvar.push_back(q);
  }

  net.bus_count = static_cast<int>(net.default_p_kw.size());
  net.slack_bus = 0;
  // Canonical feeder bases; the CSV carries only branch and bus tables.
  net.base_voltage_kv = 12.66;
  net.base_power_kva = 1000.0;

  if (net.bus_count < 2) throw TopologyError("network needs at least 2 buses");
  if (static_cast<int>(net.lines.size()) != net.bus_count - 1)
    throw TopologyError("radial network needs exactly " +
                        std::to_string(net.bus_count - 1) + " branches, got " +
                        std::to_string(net.lines.size()));
  for (const auto& line : net.lines) {
    if (line.from_bus < 0 || line.from_bus >= net.bus_count ||
        line.to_bus < 0 || line.to_bus >= net.bus_count)
      throw TopologyError("branch endpoint outside bus range");
  }
  // Reachability from the slack over undirected edges; with n-1 edges this
  // also rules out duplicated branches and cycles.
  std::vector<std::vector<int>> adj(net.bus_count);
  for (const auto& line : net.lines) {
    adj[line.from_bus].push_back(line.to_bus);
    adj[line.to_bus].push_back(line.from_bus);
  }
  std::vector<char> seen(net.bus_count, 0);
  std::vector<int> stack{net.slack_bus};
  seen[net.slack_bus] = 1;
  int reached = 1;
  while (!stack.empty()) {
    int b = stack.back();
    stack.pop_back();
    for (int nb : adj[b]) {
      if (!seen[nb]) {
        seen[nb] = 1;
        ++reached;
        stack.push_back(nb);
      }
    }
  }
  if (reached != net.bus_count)
    throw TopologyError("network is not a tree rooted at the slack bus: " +
                        std::to_string(net.bus_count - reached) +
                        " buses unreachable");
  return net;
}

namespace {

// Tree ordering: parent branch per bus, buses sorted root-outward.
struct SweepOrder {
  std::vector<int> parent_line;  // per bus, -1 at slack
  std::vector<int> order;        // buses in BFS order from slack
};

SweepOrder build_order(const NetworkModel& net) {
  SweepOrder s;
  s.parent_line.assign(net.bus_count, -1);
  std::vector<std::vector<std::pair<int, int>>> adj(net.bus_count);
  for (int li = 0; li < static_cast<int>(net.lines.size()); ++li) {
    adj[net.lines[li].from_bus].push_back({net.lines[li].to_bus, li});
    adj[net.lines[li].to_bus].push_back({net.lines[li].from_bus, li});
  }
  std::vector<char> seen(net.bus_count, 0);
  s.order.push_back(net.slack_bus);
  seen[net.slack_bus] = 1;
  for (std::size_t head = 0; head < s.order.size(); ++head) {
    int b = s.order[head];
    for (auto [nb, li] : adj[b]) {
      if (!seen[nb]) {
        seen[nb] = 1;
        s.parent_line[nb] = li;
        s.order.push_back(nb);
      }
    }
  }
  return s;
}

}  // namespace

PowerFlowResult solve_power_flow(const NetworkModel& net,
                                 const std::vector<double>& load_kw,
                                 const std::vector<double>& load_kvar) {
  const int n = net.bus_count;
  if (static_cast<int>(load_kw.size()) != n ||
      static_cast<int>(load_kvar.size()) != n)
    throw std::invalid_argument("load vectors must have one entry per bus");
  for (int b = 0; b < n; ++b) {
    if (load_kw[b] < 0.0 || load_kvar[b] < 0.0)
      throw std::invalid_argument("negative load at bus " + std::to_string(b));
  }
  if (load_kw[net.slack_bus] != 0.0 || load_kvar[net.slack_bus] != 0.0)
    throw std::invalid_argument("slack bus carries no load");

  using cd = std::complex<double>;
  const double z_base =
      (net.base_voltage_kv * net.base_voltage_kv * 1000.0) / net.base_power_kva;

  SweepOrder sweep = build_order(net);
  std::vector<cd> s_pu(n);  // per-bus load, per unit
  for (int b = 0; b < n; ++b)
    s_pu[b] = cd(load_kw[b], load_kvar[b]) / net.base_power_kva;
  std::vector<cd> z_pu(net.lines.size());
  for (std::size_t li = 0; li < net.lines.size(); ++li)
    z_pu[li] =
        cd(net.lines[li].resistance_ohm, net.lines[li].reactance_ohm) / z_base;

  std::vector<cd> v(n, cd(1.0, 0.0));
  std::vector<cd> branch_current(net.lines.size(), cd(0.0, 0.0));

  PowerFlowResult res;
  const double tol = 1e-6;
  const int max_iter = 100;
  for (res.iterations = 1; res.iterations <= max_iter; ++res.iterations) {
    // Backward: accumulate load currents from the leaves toward the slack.
    std::vector<cd> inj(n);
    for (int b = 0; b < n; ++b)
      inj[b] = std::conj(s_pu[b] / v[b]);
    std::fill(branch_current.begin(), branch_current.end(), cd(0.0, 0.0));
    for (int k = n - 1; k >= 1; --k) {
      int bus = sweep.order[k];
      int li = sweep.parent_line[bus];
      branch_current[li] += inj[bus];
      int parent = (net.lines[li].from_bus == bus) ? net.lines[li].to_bus
                                                   : net.lines[li].from_bus;
      inj[parent] += branch_current[li];
    }
    // Forward: update voltages root-outward.
    double max_dv = 0.0;
    for (int k = 1; k < n; ++k) {
      int bus = sweep.order[k];
      int li = sweep.parent_line[bus];
      int parent = (net.lines[li].from_bus == bus) ? net.lines[li].to_bus
                                                   : net.lines[li].from_bus;
      cd v_new = v[parent] - z_pu[li] * branch_current[li];
      max_dv = std::max(max_dv, std::abs(std::abs(v_new) - std::abs(v[bus])));
      v[bus] = v_new;
    }
    if (max_dv < tol) {
      res.converged = true;
      break;
    }
  }
  if (!res.converged) res.iterations = max_iter;

  // One extra backward pass at the final voltages so reported flows, losses
  // and the slack injection are a consistent snapshot (power balance then
  // holds to roundoff, not just to the sweep tolerance).
  {
    std::vector<cd> inj(n);
    for (int b = 0; b < n; ++b)
      inj[b] = std::conj(s_pu[b] / v[b]);
    std::fill(branch_current.begin(), branch_current.end(), cd(0.0, 0.0));
    for (int k = n - 1; k >= 1; --k) {
      int bus = sweep.order[k];
      int li = sweep.parent_line[bus];
      branch_current[li] += inj[bus];
      int parent = (net.lines[li].from_bus == bus) ? net.lines[li].to_bus
                                                   : net.lines[li].from_bus;
      inj[parent] += branch_current[li];
    }
  }

  res.line_flow_kva.resize(net.lines.size());
  res.line_real_kw.resize(net.lines.size());
  res.total_loss_kw = 0.0;
  for (std::size_t li = 0; li < net.lines.size(); ++li) {
    int from = net.lines[li].from_bus;
    int to = net.lines[li].to_bus;
    // Orient sending end at the bus closer to the slack.
    int send = (sweep.parent_line[to] == static_cast<int>(li)) ? from : to;
    cd s_send = v[send] * std::conj(branch_current[li]);
    res.line_flow_kva[li] = std::abs(s_send) * net.base_power_kva;
    res.line_real_kw[li] = s_send.real() * net.base_power_kva;
    res.total_loss_kw += z_pu[li].real() * std::norm(branch_current[li]) *
                         net.base_power_kva;
  }
  res.bus_voltage_pu.resize(n);
  for (int b = 0; b < n; ++b) res.bus_voltage_pu[b] = std::abs(v[b]);
  return res;
}

std::set<std::pair<int, int>> congested_hours(
    const std::array<std::vector<double>, kHours>& flows_by_hour,
    const NetworkModel& net) {
  std::set<std::pair<int, int>> out;
  for (int h = 0; h < kHours; ++h) {
    for (std::size_t li = 0; li < net.lines.size(); ++li) {
      if (flows_by_hour[h][li] > net.lines[li].capacity_kva)
        out.insert({h, static_cast<int>(li)});
    }
  }
  return out;
}

}  // namespace laa::grid
