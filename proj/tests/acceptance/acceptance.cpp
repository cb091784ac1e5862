// Acceptance suite: one line per criterion, nonzero exit when any fails.
// CSV files are written to ./acceptance_out for inspection.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pmac/core/channel.hpp"
#include "pmac/experiment/config.hpp"
#include "pmac/experiment/plot.hpp"
#include "pmac/experiment/sweep.hpp"

using namespace pmac;
namespace fs = std::filesystem;

namespace {

const fs::path kOut = "acceptance_out";

struct Verdict {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
};

std::vector<Verdict> verdicts;
std::vector<std::string> notes;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

void record(int id, std::string name, bool pass, std::string detail) {
  std::fprintf(stderr, "criterion %d done: %s\n", id, pass ? "pass" : "fail");
  verdicts.push_back({id, std::move(name), pass, std::move(detail)});
}

double cell(const CsvTable& t, const std::vector<std::string>& row, const char* col) {
  const std::string& s = row[t.column(col)];
  return s.empty() ? std::nan("") : std::stod(s);
}

// ---------------------------------------------------------------- contention

void contention_criteria() {
  ExperimentConfig cfg;  // grid N' {2,5,10,20,40} x W {8..128} x T_cp {1,2,4} ms, 10^4 replications
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<ContentionRow> rows = contention_curves(cfg);
  const double elapsed = seconds_since(t0);
  write_text(kOut / "contention.csv", contention_csv(rows));

  double worst_q = 0.0, worst_d = 0.0;
  std::string at_q, at_d;
  int compared = 0;
  for (const ContentionRow& r : rows) {
    if (r.optimal) continue;
    ++compared;
    const double eq = std::abs(r.q_analytic - r.q_mc) / r.q_mc;
    if (eq > worst_q) {
      worst_q = eq;
      at_q = "N'=" + std::to_string(r.n_prime) + " W=" + std::to_string(r.window) + " T_cp=" + format_number(r.t_cp * 1e3) + "ms";
    }
    if (r.d_analytic && r.d_mc) {
      const double ed = std::abs(*r.d_analytic - *r.d_mc) / *r.d_mc;
      if (ed > worst_d) {
        worst_d = ed;
        at_d = "N'=" + std::to_string(r.n_prime) + " W=" + std::to_string(r.window) + " T_cp=" + format_number(r.t_cp * 1e3) + "ms";
      }
    }
  }
  const bool ok = compared == 75 && worst_q <= 0.05 && worst_d <= 0.10 && elapsed <= 120.0;
  record(1, "contention model vs Monte Carlo oracle", ok,
         "worst Q error " + fmt("%.1f%%", 100 * worst_q) + " at " + at_q + " (tol 5%), worst D error " +
             fmt("%.1f%%", 100 * worst_d) + " at " + at_d + " (tol 10%), " + std::to_string(compared) +
             " grid points, " + fmt("%.1f s", elapsed) + " (limit 120 s)");

  // Shapes, read back from the CSV.
  const CsvTable t = read_csv(kOut / "contention.csv");
  std::map<std::pair<int, double>, std::vector<std::pair<int, double>>> by_point;  // (N', T_cp) -> (W, Q)
  std::map<int, std::vector<std::tuple<double, double, double>>> curve;             // N' -> (T_cp, Q, D)
  for (const auto& row : t.rows) {
    const int n = static_cast<int>(cell(t, row, "n_prime"));
    const double tcp = cell(t, row, "t_cp_ms");
    if (cell(t, row, "optimal") == 0.0) {
      by_point[{n, tcp}].emplace_back(static_cast<int>(cell(t, row, "window")), cell(t, row, "q_analytic"));
    } else {
      curve[n].emplace_back(tcp, cell(t, row, "q_analytic"), cell(t, row, "d_analytic"));
    }
  }
  int unimodal_bad = 0;
  for (auto& [key, v] : by_point) {
    std::sort(v.begin(), v.end());
    bool falling = false;
    for (std::size_t i = 1; i < v.size(); ++i) {
      const double step = v[i].second - v[i - 1].second;
      if (step < -1e-12) falling = true;
      if (falling && step > 1e-12) ++unimodal_bad;
    }
  }
  int rise_bad = 0, saturate_bad = 0, delay_bad = 0;
  for (auto& [n, v] : curve) {
    std::sort(v.begin(), v.end());
    for (std::size_t i = 1; i < v.size(); ++i) {
      if (std::get<1>(v[i]) < std::get<1>(v[i - 1]) - 1e-12) ++rise_bad;
      if (std::get<2>(v[i]) > std::get<2>(v[i - 1]) + 1e-12) ++delay_bad;
    }
    const double first_slope = (std::get<1>(v[1]) - std::get<1>(v[0])) / (std::get<0>(v[1]) - std::get<0>(v[0]));
    const std::size_t k = v.size() - 1;
    const double last_slope = (std::get<1>(v[k]) - std::get<1>(v[k - 1])) / (std::get<0>(v[k]) - std::get<0>(v[k - 1]));
    if (!(last_slope < first_slope) || std::get<1>(v[k]) > n + 1e-9 || !(std::get<1>(v[k]) > std::get<1>(v[0]))) {
      ++saturate_bad;
    }
  }
  record(2, "contention curve shapes", unimodal_bad + rise_bad + saturate_bad + delay_bad == 0,
         std::to_string(by_point.size()) + " (N', T_cp) points unimodal in W with " + std::to_string(unimodal_bad) +
             " violations; " + std::to_string(curve.size()) + " optimal-W curves: " + std::to_string(rise_bad) +
             " decreases in T_cp, " + std::to_string(saturate_bad) + " non-saturating, " + std::to_string(delay_bad) +
             " delay increases");
}

// ---------------------------------------------------------------- simulations

ExperimentConfig reference_setup(std::vector<int> nodes, std::vector<Protocol> protocols) {
  ExperimentConfig c;  // Table II channel, 20 s, 10 topologies, loads 500..8000
  c.nodes = std::move(nodes);
  c.protocols = std::move(protocols);
  return c;
}

SweepResult timed_sweep(const ExperimentConfig& cfg, const char* name) {
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t last = 0;
  SweepResult r = run_sweep(cfg, [&](std::size_t done, std::size_t total) {
    if (done * 10 / total != last) {
      last = done * 10 / total;
      std::fprintf(stderr, "  %s: %zu/%zu runs, %.0f s\n", name, done, total, seconds_since(t0));
    }
  });
  write_sweep(r, kOut / name);
  return r;
}

const AggregateRow& best_of(const SweepResult& r, Protocol p, int nodes, double load) {
  for (const AggregateRow& a : r.best) {
    if (a.protocol == p && a.nodes == nodes && a.load == load) return a;
  }
  throw std::runtime_error("no best row");
}

void simulation_criteria() {
  const auto t0 = std::chrono::steady_clock::now();
  const SweepResult main = timed_sweep(reference_setup({100}, {Protocol::pmac, Protocol::dcf, Protocol::psm}), "gamma9_n100");
  const SweepResult n50 = timed_sweep(reference_setup({50}, {Protocol::pmac}), "gamma9_n50_pmac");
  ExperimentConfig hi = reference_setup({100}, {Protocol::dcf});
  hi.channel.gamma_d = db_to_linear(17.0);
  hi.loads = {8000};
  const SweepResult g17 = timed_sweep(hi, "gamma17_n100_dcf");
  ExperimentConfig h1 = reference_setup({100}, {Protocol::pmac});
  h1.h = {1.0};
  const SweepResult small_cells = timed_sweep(h1, "gamma9_n100_pmac_h1");
  const double sim_time = seconds_since(t0);
  const ExperimentConfig ref = reference_setup({100}, {});
  const double top = *std::max_element(ref.loads.begin(), ref.loads.end());

  // 3: collision bound
  double worst = 0.0;
  std::string where;
  int points = 0;
  for (const SweepResult* s : {&main, &n50}) {
    for (const AggregateRow& a : s->aggregated) {
      if (a.protocol != Protocol::pmac) continue;
      ++points;
      if (a.collision_rate.mean >= worst) {
        worst = a.collision_rate.mean;
        where = "N=" + std::to_string(a.nodes) + " load=" + format_number(a.load);
      }
    }
  }
  record(3, "PMAC collision rate below 0.02", points == 10 && worst < 0.02,
         "worst mean collision rate " + fmt("%.4f", worst) + " at " + where + " over " + std::to_string(points) +
             " load points (N=50 and 100, 10 topologies x 20 s, h=1.5, q=1.5); sweeps took " + fmt("%.0f s", sim_time) +
             " (limit 1800 s)");
  double worst_h1 = 0.0;
  for (const AggregateRow& a : small_cells.aggregated) worst_h1 = std::max(worst_h1, a.collision_rate.mean);
  notes.push_back("info: PMAC with h=1 (r_g = d_m), N=100: worst mean collision rate " + fmt("%.4f", worst_h1) +
                  " (same-group scheduling packets do not all reach adjacent coordinators at 6 dB)");

  // 4: throughput at saturation
  const AggregateRow& pm = best_of(main, Protocol::pmac, 100, top);
  const AggregateRow& dc = best_of(main, Protocol::dcf, 100, top);
  const AggregateRow& ps = best_of(main, Protocol::psm, 100, top);
  const double r_dcf = pm.throughput.mean / dc.throughput.mean, r_psm = pm.throughput.mean / ps.throughput.mean;
  record(4, "PMAC saturation throughput >= 1.10 x best-DCF and best-PSM", r_dcf >= 1.10 && r_psm >= 1.10,
         "load " + format_number(top) + ": PMAC " + fmt("%.0f", pm.throughput.mean) + ", best-DCF " +
             fmt("%.0f", dc.throughput.mean) + " (x" + fmt("%.3f", r_dcf) + "), best-PSM " +
             fmt("%.0f", ps.throughput.mean) + " (x" + fmt("%.3f", r_psm) + ") packet*m/s");

  // 5: energy ratio
  double worst_ratio = 0.0;
  std::string ratio_at;
  bool all = true;
  for (double load : ref.loads) {
    const AggregateRow& a = best_of(main, Protocol::pmac, 100, load);
    const AggregateRow& b = best_of(main, Protocol::psm, 100, load);
    if (a.energy_per_packet.n == 0 || b.energy_per_packet.n == 0) {
      all = false;
      continue;
    }
    const double ratio = a.energy_per_packet.mean / b.energy_per_packet.mean;
    if (ratio >= worst_ratio) {
      worst_ratio = ratio;
      ratio_at = format_number(load);
    }
  }
  record(5, "PMAC energy per packet <= 0.6 x best-PSM", all && worst_ratio <= 0.6,
         "worst ratio " + fmt("%.3f", worst_ratio) + " at load " + ratio_at + " over " +
             std::to_string(ref.loads.size()) + " loads");

  // 6: best-DCF carrier-sense range
  const double rc9 = *dc.r_c / ref.d_m;
  const double rc17 = *best_of(g17, Protocol::dcf, 100, 8000).r_c / ref.d_m;
  const double step = 0.2;
  const bool ok6 = std::abs(rc9 - 2.0) <= step + 1e-9 && std::abs(rc17 - 2.8) <= step + 1e-9;
  record(6, "best-DCF carrier-sense range", ok6,
         "selected r_c = " + fmt("%.1f", rc9) + " d_m at 9 dB (expected 2.0 +/- 0.2), " + fmt("%.1f", rc17) +
             " d_m at 17 dB (expected 2.8 +/- 0.2), load " + format_number(top));

  // 7: invariants on every run
  std::uint64_t runs = 0, violations = 0, frame_bad = 0;
  const double frames = ref.duration / ref.pmac.layout.t_f;
  for (const SweepResult* s : {&main, &n50, &g17, &small_cells}) {
    for (const ResultRow& r : s->raw) {
      ++runs;
      violations += r.audit.total();
      if (r.protocol == Protocol::pmac && static_cast<double>(r.audit.frames) != frames) ++frame_bad;
    }
  }
  record(7, "protocol invariant suite on every frame of every run", violations == 0 && frame_bad == 0,
         std::to_string(runs) + " runs, " + std::to_string(violations) +
             " violations (coloring, rotation, knowledge-region conflicts, wake sets, ledger, SINR re-check), " +
             std::to_string(frame_bad) + " PMAC runs with missing frame audits");
}

// ---------------------------------------------------------------- radius math

void radius_criterion() {
  ChannelModel cm;
  double worst = 0.0, slope_dev = 0.0;
  int compared = 0;
  for (double gamma_db : {6.0, 9.0, 13.0, 17.0}) {
    cm.gamma_d = db_to_linear(gamma_db);
    const double slope = std::pow(cm.c_prime * cm.gamma_d, 1.0 / cm.alpha);
    for (double d = 0.5; d <= 60.0; d += 0.25) {
      const double approx = reserved_radius(d, cm, RadiusMode::approx);
      slope_dev = std::max(slope_dev, std::abs(approx / d - slope) / slope);
      double exact = 0.0;
      try {
        exact = reserved_radius(d, cm, RadiusMode::exact);
      } catch (const std::exception&) {
        continue;
      }
      if (interference_bound(exact, cm) < 100.0 * cm.n0) continue;
      ++compared;
      worst = std::max(worst, std::abs(exact - approx) / exact);
    }
  }
  record(8, "reserved radius exact vs approximate", compared > 0 && worst <= 0.01 && slope_dev <= 1e-12,
         std::to_string(compared) + " (Gamma_d, d) points with bound >= 100 N0: worst gap " + fmt("%.3g", worst) +
             " (tol 0.01); slope deviation " + fmt("%.3g", slope_dev) + " (tol 1e-12)");
}

// ---------------------------------------------------------------- determinism

void determinism_criterion() {
  ExperimentConfig c;
  c.nodes = {40};
  c.loads = {1000, 4000};
  c.duration = 2.0;
  c.replications = 2;
  c.r_c_factor = {2.0, 2.6};
  c.atim_window = {0.002, 0.006};
  c.n_prime = {3, 12};
  c.windows = {16, 64};
  c.t_cp_curve = {0.001, 0.003};
  c.contention_replications = 500;
  auto csv = [](const ExperimentConfig& cfg) {
    const SweepResult r = run_sweep(cfg);
    return raw_csv(r.raw) + aggregate_csv(r.aggregated) + aggregate_csv(r.best) +
           contention_csv(contention_curves(cfg));
  };
  const std::string a = csv(c);
  const std::string b = csv(c);
  ExperimentConfig p = c;
  p.parallel = 3;
  const std::string d = csv(p);
  ExperimentConfig other = c;
  other.seed = c.seed + 1;
  const std::string e = csv(other);
  record(9, "determinism", a == b && a == d && a != e,
         std::to_string(a.size()) + " CSV bytes identical across repeated runs" + std::string(a == b ? "" : " (DIFFER)") +
             " and with 3 workers" + std::string(a == d ? "" : " (DIFFER)") + "; a different seed changes the output" +
             std::string(a != e ? "" : " (SAME)"));
}

}  // namespace

int main() {
  fs::create_directories(kOut);
  const auto t0 = std::chrono::steady_clock::now();
  radius_criterion();
  determinism_criterion();
  contention_criteria();
  simulation_criteria();
  std::sort(verdicts.begin(), verdicts.end(), [](const Verdict& a, const Verdict& b) { return a.id < b.id; });
  int failed = 0;
  for (const Verdict& v : verdicts) {
    std::printf("criterion %d [%s] %s: %s\n", v.id, v.pass ? "PASS" : "FAIL", v.name.c_str(), v.detail.c_str());
    failed += v.pass ? 0 : 1;
  }
  for (const std::string& n : notes) std::printf("%s\n", n.c_str());
  std::printf("%d of %zu criteria passed in %.0f s\n", static_cast<int>(verdicts.size()) - failed, verdicts.size(),
              seconds_since(t0));
  return failed == 0 ? 0 : 1;
}
