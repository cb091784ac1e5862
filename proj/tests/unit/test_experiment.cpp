#include <cmath>
#include <string>

#include "doctest.h"
#include "pmac/analytics/contention.hpp"
#include "pmac/core/error.hpp"
#include "pmac/experiment/config.hpp"
#include "pmac/experiment/plot.hpp"
#include "pmac/experiment/sweep.hpp"

using namespace pmac;

namespace {

ExperimentConfig small() {
  ExperimentConfig c;
  c.nodes = {30};
  c.loads = {1000};
  c.duration = 1.0;
  c.replications = 1;
  c.r_c_factor = {2.0};
  c.atim_window = {0.004};
  return c;
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

}  // namespace

TEST_CASE("empty configuration gives the defaults") {
  const ExperimentConfig c = parse_config_text("");
  CHECK(c == ExperimentConfig{});
  CHECK(c.channel.alpha == 3.4);
  CHECK(c.channel.c == 1e-4);
  CHECK(c.channel.gamma_s == doctest::Approx(3.981071705534972).epsilon(1e-12));
  CHECK(c.loads.size() == 5);
  CHECK(c.nodes == std::vector<int>{100});
  CHECK(c.replications == 10);
  CHECK(c.duration == 20.0);
  const ExperimentConfig blank = parse_config_text("# only a comment\n\n   \n");
  CHECK(blank == ExperimentConfig{});
}

TEST_CASE("units convert to base units") {
  const ExperimentConfig c = parse_config_text(
      "channel.gamma_d = 9 dB\n"
      "channel.gamma_s = 4\n"
      "channel.p_d = 20 dBm   # 100 mW\n"
      "channel.n0 = 0.0000000001 mW\n"
      "psm.atim_window = 2 ms, 4000 us, 0.006 s\n"
      "scenario.d_m = 25 m\n");
  CHECK(c.channel.gamma_d == doctest::Approx(7.943282347242815).epsilon(1e-14));
  CHECK(c.channel.gamma_s == 4.0);
  CHECK(c.channel.p_d == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(c.channel.n0 == doctest::Approx(1e-13).epsilon(1e-14));
  REQUIRE(c.atim_window.size() == 3);
  CHECK(c.atim_window[0] == doctest::Approx(0.002));
  CHECK(c.atim_window[1] == doctest::Approx(0.004));
  CHECK(c.atim_window[2] == 0.006);
  CHECK(c.d_m == 25.0);
}

TEST_CASE("invalid configurations are rejected with the key named") {
  auto message = [](const char* text) {
    try {
      parse_config_text(text);
    } catch (const ValidationError& e) {
      return std::string(e.what());
    }
    return std::string("accepted");
  };
  CHECK(message("pmac.h = 0.5\n").find("pmac.h") != std::string::npos);
  CHECK(message("no.such.key = 1\n").find("unknown key 'no.such.key'") != std::string::npos);
  CHECK(message("channel.gamma_d = 9 ms\n").find("inconsistent units") != std::string::npos);
  CHECK(message("sweep.duration = 3 dB\n").find("inconsistent units") != std::string::npos);
  CHECK(message("channel.alpha = 3.4 dB\n").find("inconsistent units") != std::string::npos);
  CHECK(message("sweep.loads =\n").find("no value") != std::string::npos);
  CHECK(message("sweep.seed = 1\nsweep.seed = 2\n").find("twice") != std::string::npos);
  CHECK(message("sweep.duration = 1.05\n").find("sweep.duration") != std::string::npos);
  CHECK(message("sweep.protocols = pmac, aloha\n").find("aloha") != std::string::npos);
  CHECK(message("sweep.replications = 1.5\n").find("not an integer") != std::string::npos);
  CHECK(message("psm.atim_window = 200 ms\n").find("psm.atim_window") != std::string::npos);
  CHECK(message("just text\n").find("key = value") != std::string::npos);
  CHECK(message("channel.alpha = 1.5\n").find("channel") != std::string::npos);
}

TEST_CASE("echoed configuration parses back to the same configuration") {
  CHECK(parse_config_text(echo_config(ExperimentConfig{})) == ExperimentConfig{});
  const ExperimentConfig c = parse_config_text(
      "channel.gamma_d = 17 dB\nsweep.protocols = dcf, pmac\npmac.h = 1, 2\npmac.q = 1.2\n"
      "pmac.radius_mode = approx\ndcf.rts_cts = false\nsweep.seed = 18446744073709551615\n"
      "contention.t_cp = 1.5 ms\nscenario.nodes = 50, 100\n");
  CHECK(c.seed == 18446744073709551615ULL);
  CHECK(parse_config_text(echo_config(c)) == c);
  CHECK(echo_config(parse_config_text(echo_config(c))) == echo_config(c));
  for (const std::string& key : config_keys()) CHECK(echo_config(c).find(key + " = ") != std::string::npos);
}

TEST_CASE("summaries are the arithmetic mean and standard error") {
  const Summary s = summarize({1.0, 2.0, 4.0});
  CHECK(s.n == 3);
  CHECK(s.mean == doctest::Approx(7.0 / 3.0).epsilon(1e-15));
  // sample variance (1/2)·Σ(x - 7/3)^2 = 7/3
  CHECK(s.se == doctest::Approx(std::sqrt(7.0 / 3.0 / 3.0)).epsilon(1e-15));
  CHECK(summarize({5.0}).se == 0.0);
  CHECK(summarize({}).n == 0);
}

TEST_CASE("a one-point grid with one replication gives one raw row per protocol") {
  ExperimentConfig c = small();
  c.protocols = {Protocol::pmac};
  const SweepResult r = run_sweep(c);
  REQUIRE(r.raw.size() == 1);
  CHECK(r.aggregated.size() == 1);
  CHECK(r.best.size() == 1);
  CHECK(r.best[0].series == "PMAC");
  CHECK(r.raw[0].h == 1.5);
  CHECK(r.raw[0].metrics.counts.delivered > 0);
  CHECK(r.aggregated[0].throughput.mean == r.raw[0].metrics.throughput);
}

TEST_CASE("sweep output: grid order, aggregation, PSM tuned on DCF, deterministic") {
  ExperimentConfig c = small();
  c.loads = {500, 2000};
  c.replications = 2;
  c.r_c_factor = {1.8, 2.4};
  c.atim_window = {0.002, 0.004};
  const SweepResult a = run_sweep(c);
  CHECK(a.raw.size() == 2 * 2 + 2 * 2 * 2 + 2 * 2 * 2);
  CHECK(a.raw.front().protocol == Protocol::pmac);
  CHECK(a.raw.back().protocol == Protocol::psm);
  CHECK(a.aggregated.size() == 2 + 4 + 4);
  CHECK(a.best.size() == 6);

  for (const AggregateRow& g : a.aggregated) {
    double sum = 0.0;
    int n = 0;
    for (const ResultRow& r : a.raw) {
      if (r.protocol == g.protocol && r.load == g.load && r.r_c == g.r_c && r.atim_window == g.atim_window) {
        sum += r.metrics.throughput;
        ++n;
      }
    }
    CHECK(n == 2);
    CHECK(std::abs(g.throughput.mean - sum / n) <= 1e-12 * std::max(1.0, std::abs(g.throughput.mean)));
  }

  // PSM runs at the DCF r_c with the best mean throughput at the top load.
  double best_rc = 0.0, best_thr = -1.0;
  for (const AggregateRow& g : a.aggregated) {
    if (g.protocol == Protocol::dcf && g.load == 2000 && g.throughput.mean > best_thr) {
      best_thr = g.throughput.mean;
      best_rc = *g.r_c;
    }
  }
  for (const ResultRow& r : a.raw) {
    if (r.protocol == Protocol::psm) CHECK(*r.r_c == best_rc);
  }

  // Protocols at one grid point share topology and traffic seeds.
  CHECK(a.raw[0].topology_seed == a.raw[4].topology_seed);
  CHECK(a.raw[0].run_seed == a.raw[4].run_seed);

  c.parallel = 2;
  const SweepResult b = run_sweep(c);
  CHECK(raw_csv(a.raw) == raw_csv(b.raw));
  CHECK(aggregate_csv(a.aggregated) == aggregate_csv(b.aggregated));
  CHECK(aggregate_csv(a.best) == aggregate_csv(b.best));
}

TEST_CASE("CSV schemas are fixed") {
  CHECK(first_line(raw_csv({})) ==
        "protocol,nodes,load,h,q,r_c,atim_ms,replication,topology_seed,run_seed,throughput,energy_per_packet,"
        "collision_rate,energy_total,sent,delivered,collided,dropped,audit_frames,audit_violations");
  CHECK(first_line(aggregate_csv({})) ==
        "series,protocol,nodes,load,h,q,r_c,atim_ms,replications,throughput_mean,throughput_se,"
        "energy_per_packet_mean,energy_per_packet_se,energy_per_packet_n,collision_rate_mean,collision_rate_se");
  CHECK(first_line(contention_csv({})) ==
        "n_prime,t_cp_ms,window,optimal,q_analytic,d_analytic,q_mc,q_mc_se,d_mc,d_mc_se,replications");

  ResultRow r;
  r.protocol = Protocol::dcf;
  r.nodes = 100;
  r.load = 500;
  r.r_c = 40;
  r.replication = 3;
  r.topology_seed = 7;
  r.run_seed = 9;
  r.metrics.throughput = 1234.5;
  r.metrics.collision_rate = 0.25;
  r.metrics.energy_total = 2.0;
  r.metrics.counts.sent = 4;
  r.metrics.counts.collided = 1;
  CHECK(raw_csv({r}).substr(raw_csv({}).size()) == "dcf,100,500,,,40,,3,7,9,1234.5,,0.25,2,4,0,1,0,0,0\n");
}

TEST_CASE("PMAC throughput rises with load and then saturates") {
  ExperimentConfig c;
  c.nodes = {100};
  c.protocols = {Protocol::pmac};
  c.loads = {500, 2000, 8000, 16000};
  c.duration = 3.0;
  c.replications = 1;
  const SweepResult r = run_sweep(c);
  REQUIRE(r.aggregated.size() == 4);
  const double t500 = r.aggregated[0].throughput.mean, t2k = r.aggregated[1].throughput.mean;
  const double t8k = r.aggregated[2].throughput.mean, t16k = r.aggregated[3].throughput.mean;
  CHECK(t2k > t500);
  CHECK(t8k > t2k);
  CHECK(t16k >= 0.95 * t8k);
  CHECK(t16k / t8k < 1.5);
  CHECK(t2k / t500 > 3.0);
}

TEST_CASE("contention curves: grid then optimal-window rows") {
  ExperimentConfig c;
  c.n_prime = {1, 10};
  c.windows = {16, 32};
  c.t_cp = {0.001};
  c.t_cp_curve = {0.001, 0.002};
  c.contention_replications = 200;
  const auto rows = contention_curves(c);
  REQUIRE(rows.size() == 2 * 2 + 2 * 2);
  CHECK_FALSE(rows[0].optimal);
  CHECK(rows[0].n_prime == 1);
  CHECK(rows[0].q_mc == 1.0);
  CHECK(rows[0].d_analytic.has_value());
  for (std::size_t i = 4; i < rows.size(); ++i) {
    CHECK(rows[i].optimal);
    CHECK(rows[i].window == optimize_window(rows[i].n_prime, rows[i].t_cp));
    CHECK(rows[i].replications == 200);
  }
  CHECK(contention_csv(rows) == contention_csv(contention_curves(c)));
}

TEST_CASE("plots: deterministic SVG, single point, missing columns") {
  ExperimentConfig c = small();
  const SweepResult r = run_sweep(c);
  const CsvTable best = parse_csv(aggregate_csv(r.best));
  const std::string svg = render_figure(best, FigureKind::throughput);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("best-DCF") != std::string::npos);
  CHECK(svg.find("Traffic load") != std::string::npos);
  CHECK(svg == render_figure(parse_csv(aggregate_csv(r.best)), FigureKind::throughput));

  const CsvTable one = parse_csv("series,nodes,load,throughput_mean\nPMAC,100,500,42\n");
  CHECK(render_figure(one, FigureKind::throughput).find("<circle") != std::string::npos);
  const CsvTable lone = parse_csv(
      "series,nodes,load,throughput_mean,energy_per_packet_mean,collision_rate_mean\nPMAC,100,500,42,,0\n");
  const std::string dens = render_figure(lone, FigureKind::density);
  CHECK(dens.find("no data") != std::string::npos);  // energy panel has no values
  CHECK(dens.find("<circle") != std::string::npos);

  try {
    render_figure(parse_csv("series,load\nx,1\n"), FigureKind::collision);
    FAIL("missing columns accepted");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("nodes, collision_rate_mean") != std::string::npos);
  }

  ExperimentConfig cc;
  cc.n_prime = {2, 5};
  cc.windows = {8, 32};
  cc.t_cp_curve = {0.001, 0.002, 0.004};
  cc.contention_replications = 50;
  const std::string fig = render_figure(parse_csv(contention_csv(contention_curves(cc))), FigureKind::contention);
  std::size_t panels = 0;
  for (std::size_t p = fig.find("<g transform"); p != std::string::npos; p = fig.find("<g transform", p + 1)) ++panels;
  CHECK(panels == 3);
  CHECK(fig.find("W=32") != std::string::npos);
  CHECK(fig.find("N'=5") != std::string::npos);

  CHECK(parse_figure_kind("energy") == FigureKind::energy);
  CHECK_THROWS_AS(parse_figure_kind("pie"), ValidationError);
  CHECK_THROWS_AS(parse_csv("a,b\n1\n"), ValidationError);
}
