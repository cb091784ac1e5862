#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "pmac/core/error.hpp"
#include "pmac/sim/ledger.hpp"
#include "pmac/sim/metrics.hpp"
#include "pmac/sim/scenario.hpp"

using namespace pmac;

TEST_CASE("placement keeps every link within d_m") {
  const Scenario sc = place_nodes(100, {120, 120}, 20, 5);
  CHECK(sc.size() == 100);
  CHECK_NOTHROW(sc.validate());
  for (const Link& l : sc.links) {
    CHECK(l.distance <= 20.0);
    CHECK(l.source != l.destination);
  }
}

TEST_CASE("two nodes in range link to each other") {
  const Scenario sc = place_nodes(2, {10, 10}, 20, 1);
  CHECK(sc.links[0].destination == 1);
  CHECK(sc.links[1].destination == 0);
}

TEST_CASE("placement is reproducible from the seed") {
  const Scenario a = place_nodes(50, {120, 120}, 20, 9);
  const Scenario b = place_nodes(50, {120, 120}, 20, 9);
  const Scenario c = place_nodes(50, {120, 120}, 20, 10);
  for (std::size_t i = 0; i < a.nodes.size(); ++i) {
    CHECK(a.nodes[i] == b.nodes[i]);
    CHECK(a.links[i].destination == b.links[i].destination);
  }
  CHECK_FALSE(a.nodes[0] == c.nodes[0]);
}

TEST_CASE("placement gives up when no link can exist") {
  CHECK_THROWS_AS(place_nodes(2, {1000, 1000}, 0.001, 3), ValidationError);
  CHECK_THROWS_AS(place_nodes(1, {10, 10}, 5, 3), ValidationError);
}

TEST_CASE("traffic volume and ordering") {
  const Scenario sc = place_nodes(100, {120, 120}, 20, 5);
  CHECK(generate_traffic(sc.links, 0.0, 20.0, 1).empty());
  const int runs = 5;
  for (int r = 0; r < runs; ++r) {
    const auto arrivals = generate_traffic(sc.links, 8000.0, 20.0, 100 + r);
    const double n = static_cast<double>(arrivals.size());
    CHECK(std::abs(n - 160000.0) < 3.0 * std::sqrt(160000.0));
    CHECK(std::is_sorted(arrivals.begin(), arrivals.end(),
                         [](const Arrival& a, const Arrival& b) { return a.time < b.time; }));
    CHECK(arrivals.back().time < 20.0);
  }
}

TEST_CASE("per-source inter-arrival times are exponential") {
  const Scenario sc = place_nodes(10, {60, 60}, 20, 2);
  const auto arrivals = generate_traffic(sc.links, 1000.0, 100.0, 4);
  std::vector<double> gaps;
  double last = 0.0;
  for (const Arrival& a : arrivals) {
    if (a.source != 3) continue;
    gaps.push_back(a.time - last);
    last = a.time;
  }
  std::sort(gaps.begin(), gaps.end());
  const double rate = 100.0;
  double d = 0.0;
  const double n = static_cast<double>(gaps.size());
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    const double f = 1.0 - std::exp(-rate * gaps[i]);
    d = std::max({d, std::abs(f - i / n), std::abs(f - (i + 1) / n)});
  }
  // Kolmogorov-Smirnov critical value at the 1% level.
  CHECK(d < 1.628 / std::sqrt(n));
}

TEST_CASE("energy accounting") {
  RadioLedger ledger(2, PowerTable{});
  ledger.add(0, RadioMode::transmit, 1000);
  ledger.add(0, RadioMode::sleep, 99000);
  ledger.add(1, RadioMode::sleep, 100000);
  const EnergyReport e = account_energy(ledger, 100000);
  CHECK(e.per_node[0] == doctest::Approx(9.675e-3).epsilon(1e-12));
  CHECK(e.per_node[1] == doctest::Approx(0.0075).epsilon(1e-12));
  CHECK(e.total == doctest::Approx(9.675e-3 + 0.0075));

  RadioLedger one(1, PowerTable{});
  one.add(0, RadioMode::sleep, 1000000);
  CHECK(account_energy(one, 1000000).total == doctest::Approx(0.075));
  CHECK_THROWS_AS(account_energy(one, 999999), IntegrityError);
}

TEST_CASE("transmit draw follows radiated power") {
  CHECK(transmit_draw(0.1) == doctest::Approx(2.25));
  CHECK(transmit_draw(0.18) == doctest::Approx(3.15));
  CHECK(transmit_draw(0.14) == doctest::Approx(2.7));
}

TEST_CASE("metrics from a hand-built trace") {
  Scenario sc;
  sc.arena = {100, 100};
  sc.nodes = {{0, 0}, {10, 0}, {30, 0}};
  sc.links = {{0, 1, 10.0}, {1, 0, 10.0}, {2, 1, 20.0}};
  const std::vector<TraceEvent> trace{
      {0, 0, 1, EventKind::data_sent, 8, 1},      {1000, 0, 1, EventKind::data_delivered, 8, 1},
      {2000, 1, 0, EventKind::data_sent, 9, 2},   {3000, 1, 0, EventKind::data_delivered, 9, 2},
      {4000, 2, 1, EventKind::data_sent, 10, 3},  {5000, 2, 1, EventKind::data_collided, 10, 3},
      {6000, 2, 1, EventKind::data_sent, 11, 3},  {7000, 2, 1, EventKind::data_delivered, 11, 3},
      {7000, 2, 1, EventKind::data_delivered, 11, 3},
  };
  const Metrics m = compute_metrics(trace, sc, 2.0, 1.0);
  CHECK(m.throughput == doctest::Approx(40.0));
  CHECK(m.counts.sent == 4);
  CHECK(m.counts.delivered == 3);
  CHECK(m.collision_rate == doctest::Approx(0.25));
  REQUIRE(m.energy_per_packet.has_value());
  CHECK(*m.energy_per_packet == doctest::Approx(2.0 / 3.0));

  const Metrics none = compute_metrics({}, sc, 1.0, 1.0);
  CHECK(none.collision_rate == 0.0);
  CHECK_FALSE(none.energy_per_packet.has_value());
  CHECK(format_trace(trace).find("1000,0,1,data_delivered,8,1\n") != std::string::npos);
}
