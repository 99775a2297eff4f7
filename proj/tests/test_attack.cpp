#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "laa/attack.hpp"
#include "laa/errors.hpp"
#include "laa/rng.hpp"
#include "testutil.hpp"

using namespace laa::attack;
using laa::grid::kHours;
using laa::market::AggregatorMap;
using laa::market::LoadSchedule;

namespace {

struct Fixture {
  laa::grid::NetworkModel net;
  laa::market::Population pop;
  AggregatorMap map;
  LoadSchedule schedule;
};

Fixture make_fixture(std::uint64_t seed) {
  Fixture f;
  std::ifstream in(laa::testing::network_csv());
  REQUIRE(in.good());
  f.net = laa::grid::load_network(in);
  f.pop = laa::market::generate_population(f.net, {}, 11);
  f.map = AggregatorMap::build(f.pop);
  f.schedule.p_kw.assign(static_cast<std::size_t>(f.net.bus_count),
                         laa::market::HourlyKw{});
  laa::Rng rng(seed);
  for (int bus = 1; bus < f.net.bus_count; ++bus) {
    for (int h = 0; h < kHours; ++h) {
      f.schedule.p_kw[static_cast<std::size_t>(bus)]
                     [static_cast<std::size_t>(h)] = rng.uniform(10.0, 200.0);
    }
  }
  return f;
}

std::set<int> buses_of(const AggregatorMap& map, const std::set<int>& aggs) {
  std::set<int> buses;
  for (int a : aggs) {
    for (const auto& [bus, customer] : map.members[static_cast<std::size_t>(a)]) {
      buses.insert(bus);
    }
  }
  return buses;
}

}  // namespace

TEST_CASE("scaling rule arithmetic") {
  CHECK(100.0 * (1.0 + 0.1) == doctest::Approx(110.0).epsilon(1e-12));
}

TEST_CASE("the first draw lands exactly where the seeded stream says") {
  auto f = make_fixture(3);
  AttackConfig cfg;
  cfg.compromised_aggregators = {2};
  cfg.gamma = 0.1;
  cfg.seed = 42;
  const auto attacked = inject_laa(f.schedule, f.map, cfg);
  laa::Rng rng(42);
  const double delta = rng.uniform(0.0, 0.1);
  // Aggregator 2 owns buses 8..13; first draw hits bus 8, hour 0.
  CHECK(attacked.p_kw[8][0] == f.schedule.p_kw[8][0] * (1.0 + delta));
}

TEST_CASE("zero gamma is a bit-identical copy under any seed") {
  auto f = make_fixture(5);
  AttackConfig cfg;
  cfg.compromised_aggregators = {0, 4, 8};
  cfg.gamma = 0.0;
  for (std::uint64_t seed : {1ull, 999ull}) {
    cfg.seed = seed;
    const auto attacked = inject_laa(f.schedule, f.map, cfg);
    for (int bus = 0; bus < f.net.bus_count; ++bus) {
      for (int h = 0; h < kHours; ++h) {
        CHECK(attacked.p_kw[static_cast<std::size_t>(bus)]
                           [static_cast<std::size_t>(h)] ==
              f.schedule.p_kw[static_cast<std::size_t>(bus)]
                             [static_cast<std::size_t>(h)]);
      }
    }
  }
}

TEST_CASE("alterations stay inside the gamma envelope") {
  auto f = make_fixture(7);
  AttackConfig cfg;
  cfg.compromised_aggregators = {3, 7};
  cfg.gamma = 0.1;
  cfg.seed = 17;
  const auto attacked = inject_laa(f.schedule, f.map, cfg);
  const auto hit = buses_of(f.map, cfg.compromised_aggregators);
  for (int bus : hit) {
    for (int h = 0; h < kHours; ++h) {
      const double before = f.schedule.p_kw[static_cast<std::size_t>(bus)]
                                           [static_cast<std::size_t>(h)];
      const double after = attacked.p_kw[static_cast<std::size_t>(bus)]
                                        [static_cast<std::size_t>(h)];
      CHECK(after >= before);
      CHECK(after <= before * (1.0 + cfg.gamma) + 1e-12);
    }
  }
}

TEST_CASE("untouched aggregators and hours keep their bits") {
  auto f = make_fixture(9);
  AttackConfig cfg;
  cfg.compromised_aggregators = {1};
  cfg.gamma = 0.3;
  cfg.seed = 5;
  cfg.hours = {10, 11, 12};
  const auto attacked = inject_laa(f.schedule, f.map, cfg);
  const auto hit = buses_of(f.map, cfg.compromised_aggregators);
  int changed = 0;
  for (int bus = 0; bus < f.net.bus_count; ++bus) {
    for (int h = 0; h < kHours; ++h) {
      const double before = f.schedule.p_kw[static_cast<std::size_t>(bus)]
                                           [static_cast<std::size_t>(h)];
      const double after = attacked.p_kw[static_cast<std::size_t>(bus)]
                                        [static_cast<std::size_t>(h)];
      const bool targeted = hit.count(bus) > 0 && h >= 10 && h <= 12;
      if (targeted) {
        changed += after != before ? 1 : 0;
      } else {
        CHECK(after == before);
      }
    }
  }
  // Two buses, three hours; a zero draw is measure-zero.
  CHECK(changed == 6);
}

TEST_CASE("injection is deterministic and never mutates its input") {
  auto f = make_fixture(13);
  const auto snapshot = f.schedule;
  AttackConfig cfg;
  cfg.compromised_aggregators = {0, 5};
  cfg.gamma = 0.1;
  cfg.seed = 101;
  const auto a = inject_laa(f.schedule, f.map, cfg);
  const auto b = inject_laa(f.schedule, f.map, cfg);
  for (int bus = 0; bus < f.net.bus_count; ++bus) {
    for (int h = 0; h < kHours; ++h) {
      CHECK(a.p_kw[static_cast<std::size_t>(bus)][static_cast<std::size_t>(h)] ==
            b.p_kw[static_cast<std::size_t>(bus)][static_cast<std::size_t>(h)]);
      CHECK(f.schedule.p_kw[static_cast<std::size_t>(bus)]
                           [static_cast<std::size_t>(h)] ==
            snapshot.p_kw[static_cast<std::size_t>(bus)]
                         [static_cast<std::size_t>(h)]);
    }
  }
}

TEST_CASE("bad configs are rejected") {
  auto f = make_fixture(15);
  AttackConfig cfg;
  CHECK_THROWS_AS(inject_laa(f.schedule, f.map, cfg), laa::ConfigError);
  cfg.compromised_aggregators = {12};
  CHECK_THROWS_AS(inject_laa(f.schedule, f.map, cfg), laa::ConfigError);
  cfg.compromised_aggregators = {2};
  cfg.gamma = 1.5;
  CHECK_THROWS_AS(inject_laa(f.schedule, f.map, cfg), laa::ConfigError);
  cfg.gamma = 0.1;
  cfg.hours = {4, 4};
  CHECK_THROWS_AS(inject_laa(f.schedule, f.map, cfg), laa::ConfigError);
  cfg.hours = {25};
  CHECK_THROWS_AS(inject_laa(f.schedule, f.map, cfg), laa::ConfigError);
  cfg.hours.clear();
  f.schedule.p_kw.resize(10);
  CHECK_THROWS_AS(inject_laa(f.schedule, f.map, cfg), std::invalid_argument);
}
