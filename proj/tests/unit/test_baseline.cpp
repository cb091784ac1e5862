#include <cmath>

#include "doctest.h"
#include "pmac/baseline/csma.hpp"
#include "pmac/core/error.hpp"

using namespace pmac;

namespace {

Scenario line(std::vector<Position> nodes, std::vector<Link> links) {
  Scenario sc;
  sc.arena = {200, 200};
  sc.d_m = 20;
  sc.nodes = std::move(nodes);
  for (Link& l : links) {
    l.distance = distance(sc.nodes[static_cast<std::size_t>(l.source)], sc.nodes[static_cast<std::size_t>(l.destination)]);
  }
  sc.links = std::move(links);
  return sc;
}

void check_ledger(const SimResult& r, double duration) {
  for (std::size_t n = 0; n < r.ledger.size(); ++n) {
    CHECK(r.ledger.total_us(n) == static_cast<std::int64_t>(std::llround(duration * 1e6)));
  }
}

}  // namespace

TEST_CASE("empty traffic leaves every DCF radio idle") {
  const Scenario sc = place_nodes(20, {60, 60}, 20, 1);
  ChannelModel cm;
  const SimResult r = run_dcf({&sc, &cm, PowerTable{}, 0.0, 1.0, 1, false}, DcfConfig{});
  CHECK(r.metrics.counts.sent == 0);
  CHECK(r.metrics.counts.delivered == 0);
  for (std::size_t n = 0; n < r.ledger.size(); ++n) CHECK(r.ledger.time_us(n, RadioMode::idle) == 1000000);
  CHECK(r.metrics.energy_total == doctest::Approx(20 * 1.15));
}

TEST_CASE("two saturated nodes in mutual range never collide on data") {
  const Scenario sc = line({{50, 50}, {60, 50}}, {{0, 1}, {1, 0}});
  ChannelModel cm;
  const double duration = 5.0;
  const SimResult r = run_dcf({&sc, &cm, PowerTable{}, 5000.0, duration, 3, false}, DcfConfig{});
  check_ledger(r, duration);
  CHECK(r.metrics.counts.collided == 0);
  // One exchange: RTS, CTS, DATA, ACK with three SIFS, plus DIFS and on
  // average (CW_min - 1)/2 slots of backoff shared by two contenders.
  const CsmaTiming t;
  const double exchange = t.rts + t.cts + t.data + t.ack + 3 * t.sifs + t.difs;
  const double upper = duration * 1e6 / exchange;
  const double delivered = static_cast<double>(r.metrics.counts.delivered);
  CHECK(delivered < upper);
  CHECK(delivered > 0.8 * duration * 1e6 / (exchange + 7 * t.slot));
}

TEST_CASE("hidden terminals collide without RTS/CTS and far less with it") {
  // A and C cannot sense each other; both talk to B.
  const Scenario sc = line({{0, 0}, {15, 0}, {30, 0}}, {{0, 1}, {1, 0}, {2, 1}});
  ChannelModel cm;
  DcfConfig basic;
  basic.r_c = 20;
  basic.rts_cts = false;
  DcfConfig rts = basic;
  rts.rts_cts = true;
  const CsmaRun run{&sc, &cm, PowerTable{}, 600.0, 5.0, 4, false};
  const SimResult a = run_dcf(run, basic);
  const SimResult b = run_dcf(run, rts);
  CHECK(a.metrics.collision_rate > 0.2);
  CHECK(b.metrics.collision_rate < 0.5 * a.metrics.collision_rate);
}

TEST_CASE("PSM without traffic: awake exactly the ATIM window") {
  const Scenario sc = place_nodes(10, {60, 60}, 20, 2);
  ChannelModel cm;
  PsmConfig psm;
  psm.atim_window = 0.004;
  const SimResult r = run_psm({&sc, &cm, PowerTable{}, 0.0, 1.0, 1, false}, psm);
  for (std::size_t n = 0; n < r.ledger.size(); ++n) CHECK(r.ledger.awake_us(n) == 10 * 4000);
}

TEST_CASE("PSM with one flow keeps only its endpoints awake") {
  const Scenario sc = line({{10, 10}, {20, 10}, {100, 100}, {110, 100}}, {{0, 1}, {1, 0}, {2, 3}, {3, 2}});
  ChannelModel cm;
  PsmConfig psm;
  // Traffic only on node 0: give it the whole load by using a scenario view
  // where every other source has no arrivals is not possible with the uniform
  // split, so compare awake times instead: idle pairs sleep after the window.
  const SimResult r = run_psm({&sc, &cm, PowerTable{}, 40.0, 2.0, 5, false}, psm);
  check_ledger(r, 2.0);
  for (std::size_t n = 0; n < r.ledger.size(); ++n) {
    CHECK(r.ledger.awake_us(n) >= 20 * 4000);
    CHECK(r.ledger.awake_us(n) < 2000000);
  }
  CHECK(r.metrics.counts.delivered > 0);
}

TEST_CASE("PSM saturation throughput trails DCF and its energy never exceeds DCF") {
  const Scenario sc = place_nodes(30, {60, 60}, 20, 8);
  ChannelModel cm;
  const CsmaRun run{&sc, &cm, PowerTable{}, 3000.0, 2.0, 6, false};
  DcfConfig dcf;
  dcf.r_c = 40;
  PsmConfig psm;
  psm.inner = dcf;
  psm.atim_window = 0.004;
  const SimResult d = run_dcf(run, dcf);
  const SimResult p = run_psm(run, psm);
  CHECK(p.metrics.throughput < d.metrics.throughput);
  CHECK(p.metrics.energy_total <= d.metrics.energy_total);
}

TEST_CASE("DCF runs are deterministic") {
  const Scenario sc = place_nodes(30, {60, 60}, 20, 8);
  ChannelModel cm;
  const CsmaRun run{&sc, &cm, PowerTable{}, 2000.0, 1.0, 6, true};
  const SimResult a = run_dcf(run, DcfConfig{});
  const SimResult b = run_dcf(run, DcfConfig{});
  CHECK(a.metrics.counts.delivered == b.metrics.counts.delivered);
  CHECK(a.metrics.energy_total == b.metrics.energy_total);
  CHECK(format_trace(a.trace) == format_trace(b.trace));
}

TEST_CASE("tuning over a single-point grid returns that point") {
  const Scenario sc = place_nodes(20, {60, 60}, 20, 8);
  ChannelModel cm;
  const TuneResult t = tune_best(Scheme::dcf, {44.0}, {sc}, cm, PowerTable{}, 1000.0, 0.5, 1);
  CHECK(t.best_value == 44.0);
  CHECK(t.points.size() == 1);
  CHECK_THROWS_AS(tune_best(Scheme::dcf, {}, {sc}, cm, PowerTable{}, 1000.0, 0.5, 1), ValidationError);
}

TEST_CASE("configuration validation") {
  DcfConfig d;
  d.cw_max = 7;
  CHECK_THROWS_AS(d.validate(), ValidationError);
  PsmConfig p;
  p.atim_window = 0.2;
  CHECK_THROWS_AS(p.validate(), ValidationError);
}
