#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <complex>
#include <fstream>
#include <sstream>

#include "laa/errors.hpp"
#include "laa/grid.hpp"
#include "laa/rng.hpp"
#include "oracle_powerflow.hpp"
#include "testutil.hpp"

using namespace laa;

namespace {

grid::NetworkModel load_canonical() {
  std::ifstream in(testing::network_csv());
  REQUIRE(in.good());
  return grid::load_network(in);
}

std::vector<int> path_lines_to(const grid::NetworkModel& net, int target) {
  // parent walk computed independently of the solver internals
  std::vector<int> parent_bus(net.bus_count, -1), parent_line(net.bus_count, -1);
  std::vector<int> order{net.slack_bus};
  std::vector<char> seen(net.bus_count, 0);
  seen[net.slack_bus] = 1;
  for (std::size_t h = 0; h < order.size(); ++h) {
    for (int li = 0; li < static_cast<int>(net.lines.size()); ++li) {
      int a = net.lines[li].from_bus, b = net.lines[li].to_bus;
      if (a == order[h] && !seen[b]) {
        seen[b] = 1;
        parent_bus[b] = a;
        parent_line[b] = li;
        order.push_back(b);
      } else if (b == order[h] && !seen[a]) {
        seen[a] = 1;
        parent_bus[a] = b;
        parent_line[a] = li;
        order.push_back(a);
      }
    }
  }
  std::vector<int> lines;
  for (int cur = target; cur != net.slack_bus; cur = parent_bus[cur])
    lines.push_back(parent_line[cur]);
  return lines;
}

}  // namespace

TEST_CASE("canonical 33-bus file loads") {
  auto net = load_canonical();
  CHECK(net.bus_count == 33);
  CHECK(net.lines.size() == 32);
  CHECK(net.slack_bus == 0);
  double p = 0, q = 0;
  for (int b = 0; b < net.bus_count; ++b) {
    p += net.default_p_kw[b];
    q += net.default_q_kvar[b];
  }
  CHECK(p == doctest::Approx(3715.0));
  CHECK(q == doctest::Approx(2300.0));
}

TEST_CASE("missing branch rejected") {
  std::string text = testing::read_file(testing::network_csv());
  // drop the last branch row (line 33 of the file)
  std::istringstream all(text);
  std::ostringstream out;
  std::string line;
  int n = 0;
  while (std::getline(all, line)) {
    ++n;
    if (n == 33) continue;
    out << line << "\n";
  }
  std::istringstream in(out.str());
  CHECK_THROWS_AS(grid::load_network(in), TopologyError);
}

TEST_CASE("duplicated branch rejected") {
  std::string text = testing::read_file(testing::network_csv());
  std::istringstream all(text);
  std::ostringstream out;
  std::string line;
  int n = 0;
  while (std::getline(all, line)) {
    ++n;
    if (n == 8) line = "5,6,0.1872,0.6188,99999";  // second copy of branch 5-6
    out << line << "\n";
  }
  std::istringstream in(out.str());
  CHECK_THROWS_AS(grid::load_network(in), TopologyError);
}

TEST_CASE("malformed record names the line") {
  std::istringstream in(
      "from,to,r_ohm,x_ohm,capacity_kva\n"
      "0,1,0.09,0.04,100\n"
      "1,oops,0.49,0.25,100\n"
      "bus,p_kw,q_kvar\n0,0,0\n1,10,5\n2,10,5\n");
  try {
    grid::load_network(in);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("zero loads: unit voltages, zero flows, one sweep") {
  auto net = load_canonical();
  std::vector<double> zeros(net.bus_count, 0.0);
  auto res = grid::solve_power_flow(net, zeros, zeros);
  CHECK(res.converged);
  CHECK(res.iterations == 1);
  CHECK(res.total_loss_kw == 0.0);
  for (double v : res.bus_voltage_pu) CHECK(v == 1.0);
  for (double f : res.line_flow_kva) CHECK(f == 0.0);
}

TEST_CASE("default loading matches the reference solver") {
  auto net = load_canonical();
  auto res = grid::solve_power_flow(net, net.default_p_kw, net.default_q_kvar);
  REQUIRE(res.converged);

  auto oracle = testing::oracle_power_flow(net, net.default_p_kw, net.default_q_kvar);
  REQUIRE(oracle.converged);

  // Textbook values for the 12.66 kV feeder at nominal loading.
  CHECK(res.total_loss_kw == doctest::Approx(202.7).epsilon(0.01));
  double vmin = 1.0, vmin_oracle = 1.0;
  for (double v : res.bus_voltage_pu) vmin = std::min(vmin, v);
  for (double v : oracle.bus_voltage_pu) vmin_oracle = std::min(vmin_oracle, v);
  CHECK(vmin == doctest::Approx(0.913).epsilon(0.002));

  CHECK(res.total_loss_kw ==
        doctest::Approx(oracle.total_loss_kw).epsilon(0.01));
  CHECK(std::abs(vmin - vmin_oracle) < 0.005);
  for (int b = 0; b < net.bus_count; ++b)
    CHECK(std::abs(res.bus_voltage_pu[b] - oracle.bus_voltage_pu[b]) < 1e-4);
  for (std::size_t li = 0; li < net.lines.size(); ++li)
    CHECK(res.line_flow_kva[li] ==
          doctest::Approx(oracle.line_flow_kva[li]).epsilon(1e-3));
}

TEST_CASE("single load adjacent to slack has a closed-form flow") {
  auto net = load_canonical();
  std::vector<double> p(net.bus_count, 0.0), q(net.bus_count, 0.0);
  p[1] = 100.0;
  auto res = grid::solve_power_flow(net, p, q);
  REQUIRE(res.converged);

  // Two-bus fixed point solved directly on the line 0-1 impedance.
  const double z_base = 12.66 * 12.66 * 1000.0 / 1000.0;
  std::complex<double> z(0.0922 / z_base, 0.0470 / z_base);
  std::complex<double> s(0.1, 0.0);
  std::complex<double> v1(1.0, 0.0);
  for (int k = 0; k < 200; ++k) v1 = 1.0 - z * std::conj(s / v1);
  double expected_kw = (std::conj(s / v1)).real() * 1000.0;
  double expected_kw_direct = 100.0 + (0.0922 / z_base) * std::norm(std::conj(s / v1)) * 1000.0;

  CHECK(res.line_real_kw[0] == doctest::Approx(expected_kw).epsilon(1e-9));
  CHECK(res.line_real_kw[0] == doctest::Approx(expected_kw_direct).epsilon(1e-9));
  CHECK(res.line_real_kw[0] > 100.0);
  CHECK(res.line_real_kw[0] < 100.1);
  for (std::size_t li = 1; li < net.lines.size(); ++li)
    CHECK(res.line_flow_kva[li] == 0.0);
}

TEST_CASE("negative load rejected") {
  auto net = load_canonical();
  std::vector<double> p(net.bus_count, 0.0), q(net.bus_count, 0.0);
  p[5] = -1.0;
  CHECK_THROWS_AS(grid::solve_power_flow(net, p, q), std::invalid_argument);
}

TEST_CASE("power balance at the slack") {
  auto net = load_canonical();
  auto res = grid::solve_power_flow(net, net.default_p_kw, net.default_q_kvar);
  REQUIRE(res.converged);
  double loads = 0.0;
  for (double v : net.default_p_kw) loads += v;
  double slack_injection = res.line_real_kw[0];  // only line 0 touches the slack
  CHECK(std::abs(slack_injection - (loads + res.total_loss_kw)) < 1e-3);
}

TEST_CASE("raising one load never lowers flow on its feed path") {
  auto net = load_canonical();
  Rng rng(derive_seed(77, SeedPurpose::BaseNoise, 0));
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> p(net.bus_count, 0.0), q(net.bus_count, 0.0);
    for (int b = 1; b < net.bus_count; ++b) {
      p[b] = net.default_p_kw[b] * rng.uniform(0.2, 1.5);
      q[b] = net.default_q_kvar[b] * rng.uniform(0.2, 1.5);
    }
    int bus = 1 + static_cast<int>(rng.uniform_int(net.bus_count - 1));
    auto before = grid::solve_power_flow(net, p, q);
    p[bus] += rng.uniform(10.0, 120.0);
    auto after = grid::solve_power_flow(net, p, q);
    REQUIRE(before.converged);
    REQUIRE(after.converged);
    for (int li : path_lines_to(net, bus))
      CHECK(after.line_flow_kva[li] >= before.line_flow_kva[li] - 1e-9);
  }
}

TEST_CASE("solver is deterministic") {
  auto net = load_canonical();
  auto a = grid::solve_power_flow(net, net.default_p_kw, net.default_q_kvar);
  auto b = grid::solve_power_flow(net, net.default_p_kw, net.default_q_kvar);
  CHECK(a.total_loss_kw == b.total_loss_kw);
  CHECK(a.iterations == b.iterations);
  for (int i = 0; i < net.bus_count; ++i)
    CHECK(a.bus_voltage_pu[i] == b.bus_voltage_pu[i]);
  for (std::size_t li = 0; li < net.lines.size(); ++li)
    CHECK(a.line_flow_kva[li] == b.line_flow_kva[li]);
}

TEST_CASE("congestion is strict exceedance") {
  auto net = load_canonical();
  std::array<std::vector<double>, grid::kHours> flows;
  for (auto& f : flows) {
    f.assign(net.lines.size(), 0.0);
    for (std::size_t li = 0; li < net.lines.size(); ++li)
      f[li] = net.lines[li].capacity_kva * 0.5;
  }
  CHECK(grid::congested_hours(flows, net).empty());

  for (int h : {10, 11, 12}) flows[h][0] = net.lines[0].capacity_kva * 1.01;
  auto set = grid::congested_hours(flows, net);
  CHECK(set == std::set<std::pair<int, int>>{{10, 0}, {11, 0}, {12, 0}});

  // exactly at capacity does not count
  flows[10][0] = net.lines[0].capacity_kva;
  set = grid::congested_hours(flows, net);
  CHECK(set == std::set<std::pair<int, int>>{{11, 0}, {12, 0}});
}
