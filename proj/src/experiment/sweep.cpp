#include "pmac/experiment/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include "pmac/analytics/contention.hpp"
#include "pmac/core/error.hpp"
#include "pmac/core/rng.hpp"

namespace pmac {

std::string format_number(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

Summary summarize(const std::vector<double>& xs) {
  Summary s;
  s.n = static_cast<int>(xs.size());
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.se = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
  }
  return s;
}

std::uint64_t topology_seed(std::uint64_t seed, int nodes, int replication) {
  return CounterRng(seed, 0x746f706fULL).split(static_cast<std::uint64_t>(nodes)).split(static_cast<std::uint64_t>(replication)).key();
}

std::uint64_t run_seed(std::uint64_t seed, int nodes, int replication, double load) {
  return CounterRng(seed, 0x72756eULL)
      .split(static_cast<std::uint64_t>(nodes))
      .split(static_cast<std::uint64_t>(replication))
      .split(std::bit_cast<std::uint64_t>(load))
      .key();
}

namespace {

struct Cell {
  ResultRow row;
};

SimConfig sim_config(const ExperimentConfig& cfg, const ResultRow& row) {
  SimConfig sc;
  sc.protocol = row.protocol;
  sc.channel = cfg.channel;
  sc.power = cfg.power;
  sc.load = row.load;
  sc.duration = cfg.duration;
  sc.seed = row.run_seed;
  sc.pmac = cfg.pmac;
  sc.dcf = cfg.dcf;
  sc.psm = cfg.psm;
  if (row.h) sc.pmac.h = *row.h;
  if (row.q) sc.pmac.q = *row.q;
  if (row.r_c) {
    sc.dcf.r_c = *row.r_c;
    sc.psm.inner = sc.dcf;
  }
  if (row.atim_window) sc.psm.atim_window = *row.atim_window;
  return sc;
}

ResultRow base_row(const ExperimentConfig& cfg, Protocol p, int nodes, double load, int rep) {
  ResultRow r;
  r.protocol = p;
  r.nodes = nodes;
  r.load = load;
  r.replication = rep;
  r.topology_seed = topology_seed(cfg.seed, nodes, rep);
  r.run_seed = run_seed(cfg.seed, nodes, rep, load);
  return r;
}

void run_cell(const ExperimentConfig& cfg, const Scenario& sc, ResultRow& row, SimResult* full, bool trace) {
  SimConfig s = sim_config(cfg, row);
  s.record_trace = trace;
  SimResult r = run_simulation(sc, s);
  row.metrics = r.metrics;
  row.dropped = r.dropped;
  row.audit = r.audit;
  if (full) *full = std::move(r);
}

std::string describe(const ResultRow& r) {
  std::string s = std::string(to_string(r.protocol)) + " nodes=" + std::to_string(r.nodes) +
                  " load=" + format_number(r.load) + " replication=" + std::to_string(r.replication);
  if (r.h) s += " h=" + format_number(*r.h);
  if (r.q) s += " q=" + format_number(*r.q);
  if (r.r_c) s += " r_c=" + format_number(*r.r_c);
  if (r.atim_window) s += " atim=" + format_number(*r.atim_window);
  return s;
}

std::string series_label(const ResultRow& r) {
  std::string s = to_string(r.protocol);
  if (r.h) s += " h=" + format_number(*r.h);
  if (r.q) s += " q=" + format_number(*r.q);
  if (r.atim_window) s += " atim=" + format_number(*r.atim_window * 1e3) + "ms";
  if (r.r_c) s += " r_c=" + format_number(*r.r_c);
  return s;
}

std::string best_label(Protocol p) {
  switch (p) {
    case Protocol::pmac: return "PMAC";
    case Protocol::dcf: return "best-DCF";
    case Protocol::psm: return "best-PSM";
  }
  return "";
}

// Runs cells[i] for every i in `todo`, up to `parallel` at a time. On failure
// stops handing out work and rethrows the first failing cell in grid order.
void execute(const ExperimentConfig& cfg, const std::map<std::pair<int, int>, Scenario>& topo, std::vector<Cell>& cells,
             const std::vector<std::size_t>& todo, std::vector<std::uint8_t>& done, std::size_t& finished,
             std::size_t total, const Progress& progress) {
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex mu;
  std::optional<std::size_t> failed;
  std::string failure;
  auto worker = [&] {
    while (!stop.load()) {
      const std::size_t k = next.fetch_add(1);
      if (k >= todo.size()) return;
      const std::size_t i = todo[k];
      ResultRow& row = cells[i].row;
      try {
        run_cell(cfg, topo.at({row.nodes, row.replication}), row, nullptr, false);
        std::lock_guard lock(mu);
        done[i] = 1;
        ++finished;
        if (progress) progress(finished, total);
      } catch (const std::exception& e) {
        std::lock_guard lock(mu);
        if (!failed || i < *failed) {
          failed = i;
          failure = e.what();
        }
        stop = true;
      }
    }
  };
  const int n = std::max(1, std::min<int>(cfg.parallel, static_cast<int>(todo.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failed) {
    std::vector<ResultRow> completed;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (done[i]) completed.push_back(cells[i].row);
    }
    throw SweepError("sweep cell failed (" + describe(cells[*failed].row) + "): " + failure, std::move(completed));
  }
}

}  // namespace

ResultRow simulate_single(const ExperimentConfig& cfg, Protocol protocol, int replication, SimResult* full,
                          bool record_trace) {
  cfg.validate();
  const int nodes = cfg.nodes.front();
  ResultRow row = base_row(cfg, protocol, nodes, cfg.loads.front(), replication);
  switch (protocol) {
    case Protocol::pmac:
      row.h = cfg.h.front();
      row.q = cfg.q.front();
      break;
    case Protocol::dcf:
      row.r_c = cfg.r_c_factor.front() * cfg.d_m;
      break;
    case Protocol::psm:
      row.r_c = cfg.psm_r_c_factor * cfg.d_m;
      row.atim_window = cfg.atim_window.front();
      break;
  }
  const Scenario sc = place_nodes(nodes, cfg.arena(), cfg.d_m, row.topology_seed);
  run_cell(cfg, sc, row, full, record_trace);
  return row;
}

SweepResult run_sweep(const ExperimentConfig& cfg, const Progress& progress) {
  cfg.validate();
  std::map<std::pair<int, int>, Scenario> topo;
  for (int n : cfg.nodes) {
    for (int rep = 0; rep < cfg.replications; ++rep) {
      topo.emplace(std::pair{n, rep}, place_nodes(n, cfg.arena(), cfg.d_m, topology_seed(cfg.seed, n, rep)));
    }
  }
  for (const auto& [key, sc] : topo) {
    SimConfig probe;
    probe.channel = cfg.channel;
    probe.duration = cfg.duration;
    probe.pmac = cfg.pmac;
    probe.dcf = cfg.dcf;
    probe.psm = cfg.psm;
    for (double h : cfg.h) {
      probe.pmac.h = h;
      probe.validate(sc);
    }
  }

  std::vector<Cell> cells;
  for (int n : cfg.nodes) {
    for (Protocol p : cfg.protocols) {
      auto push = [&](auto&& fill) {
        for (double load : cfg.loads) {
          for (int rep = 0; rep < cfg.replications; ++rep) {
            Cell c{base_row(cfg, p, n, load, rep)};
            fill(c.row);
            cells.push_back(std::move(c));
          }
        }
      };
      switch (p) {
        case Protocol::pmac:
          for (double h : cfg.h) {
            for (double q : cfg.q) push([&](ResultRow& r) { r.h = h; r.q = q; });
          }
          break;
        case Protocol::dcf:
          for (double f : cfg.r_c_factor) push([&](ResultRow& r) { r.r_c = f * cfg.d_m; });
          break;
        case Protocol::psm:
          for (double a : cfg.atim_window) push([&](ResultRow& r) { r.atim_window = a; });
          break;
      }
    }
  }

  std::vector<std::uint8_t> done(cells.size(), 0);
  std::size_t finished = 0;
  std::vector<std::size_t> first, second;
  for (std::size_t i = 0; i < cells.size(); ++i) (cells[i].row.protocol == Protocol::psm ? second : first).push_back(i);
  execute(cfg, topo, cells, first, done, finished, cells.size(), progress);

  const bool tuned = std::find(cfg.protocols.begin(), cfg.protocols.end(), Protocol::dcf) != cfg.protocols.end();
  const double top_load = *std::max_element(cfg.loads.begin(), cfg.loads.end());
  std::map<int, double> psm_r_c;
  for (int n : cfg.nodes) {
    psm_r_c[n] = cfg.psm_r_c_factor * cfg.d_m;
    if (!tuned) continue;
    std::vector<ResultRow> dcf;
    for (const Cell& c : cells) {
      if (c.row.protocol == Protocol::dcf && c.row.nodes == n && c.row.load == top_load) dcf.push_back(c.row);
    }
    const std::vector<AggregateRow> agg = aggregate(dcf);
    const auto best = std::max_element(agg.begin(), agg.end(), [](const AggregateRow& a, const AggregateRow& b) {
      return a.throughput.mean < b.throughput.mean;
    });
    psm_r_c[n] = *best->r_c;
  }
  for (std::size_t i : second) cells[i].row.r_c = psm_r_c[cells[i].row.nodes];
  execute(cfg, topo, cells, second, done, finished, cells.size(), progress);

  SweepResult out;
  for (Cell& c : cells) out.raw.push_back(std::move(c.row));
  out.aggregated = aggregate(out.raw);
  out.best = select_best(out.aggregated);
  return out;
}

std::vector<AggregateRow> aggregate(const std::vector<ResultRow>& rows) {
  struct Acc {
    AggregateRow head;
    std::vector<double> thr, epp, coll;
  };
  std::vector<Acc> groups;
  std::map<std::string, std::size_t> index;
  for (const ResultRow& r : rows) {
    const std::string key = series_label(r) + "|" + std::to_string(r.nodes) + "|" + format_number(r.load);
    auto [it, fresh] = index.emplace(key, groups.size());
    if (fresh) {
      Acc a;
      a.head.series = series_label(r);
      a.head.protocol = r.protocol;
      a.head.nodes = r.nodes;
      a.head.load = r.load;
      a.head.h = r.h;
      a.head.q = r.q;
      a.head.r_c = r.r_c;
      a.head.atim_window = r.atim_window;
      groups.push_back(std::move(a));
    }
    Acc& a = groups[it->second];
    a.thr.push_back(r.metrics.throughput);
    if (r.metrics.energy_per_packet) a.epp.push_back(*r.metrics.energy_per_packet);
    a.coll.push_back(r.metrics.collision_rate);
  }
  std::vector<AggregateRow> out;
  for (Acc& a : groups) {
    a.head.replications = static_cast<int>(a.thr.size());
    a.head.throughput = summarize(a.thr);
    a.head.energy_per_packet = summarize(a.epp);
    a.head.collision_rate = summarize(a.coll);
    out.push_back(std::move(a.head));
  }
  return out;
}

std::vector<AggregateRow> select_best(const std::vector<AggregateRow>& rows) {
  std::vector<AggregateRow> out;
  std::map<std::string, std::size_t> index;
  for (const AggregateRow& r : rows) {
    const std::string key = std::string(to_string(r.protocol)) + "|" + std::to_string(r.nodes) + "|" + format_number(r.load);
    auto [it, fresh] = index.emplace(key, out.size());
    if (fresh) {
      out.push_back(r);
    } else if (r.throughput.mean > out[it->second].throughput.mean) {
      out[it->second] = r;
    }
  }
  for (AggregateRow& r : out) r.series = best_label(r.protocol);
  return out;
}

namespace {

std::string opt(const std::optional<double>& x) { return x ? format_number(*x) : std::string(); }

}  // namespace

std::string raw_csv(const std::vector<ResultRow>& rows) {
  std::string s =
      "protocol,nodes,load,h,q,r_c,atim_ms,replication,topology_seed,run_seed,throughput,energy_per_packet,"
      "collision_rate,energy_total,sent,delivered,collided,dropped,audit_frames,audit_violations\n";
  for (const ResultRow& r : rows) {
    s += std::string(to_string(r.protocol)) + "," + std::to_string(r.nodes) + "," + format_number(r.load) + "," +
         opt(r.h) + "," + opt(r.q) + "," + opt(r.r_c) + "," +
         (r.atim_window ? format_number(*r.atim_window * 1e3) : std::string()) + "," + std::to_string(r.replication) +
         "," + std::to_string(r.topology_seed) + "," + std::to_string(r.run_seed) + "," +
         format_number(r.metrics.throughput) + "," + opt(r.metrics.energy_per_packet) + "," +
         format_number(r.metrics.collision_rate) + "," + format_number(r.metrics.energy_total) + "," +
         std::to_string(r.metrics.counts.sent) + "," + std::to_string(r.metrics.counts.delivered) + "," +
         std::to_string(r.metrics.counts.collided) + "," + std::to_string(r.dropped) + "," +
         std::to_string(r.audit.frames) + "," + std::to_string(r.audit.total()) + "\n";
  }
  return s;
}

std::string aggregate_csv(const std::vector<AggregateRow>& rows) {
  std::string s =
      "series,protocol,nodes,load,h,q,r_c,atim_ms,replications,throughput_mean,throughput_se,"
      "energy_per_packet_mean,energy_per_packet_se,energy_per_packet_n,collision_rate_mean,collision_rate_se\n";
  for (const AggregateRow& r : rows) {
    const bool epp = r.energy_per_packet.n > 0;
    s += r.series + "," + to_string(r.protocol) + "," + std::to_string(r.nodes) + "," + format_number(r.load) + "," +
         opt(r.h) + "," + opt(r.q) + "," + opt(r.r_c) + "," +
         (r.atim_window ? format_number(*r.atim_window * 1e3) : std::string()) + "," + std::to_string(r.replications) +
         "," + format_number(r.throughput.mean) + "," + format_number(r.throughput.se) + "," +
         (epp ? format_number(r.energy_per_packet.mean) : std::string()) + "," +
         (epp ? format_number(r.energy_per_packet.se) : std::string()) + "," + std::to_string(r.energy_per_packet.n) +
         "," + format_number(r.collision_rate.mean) + "," + format_number(r.collision_rate.se) + "\n";
  }
  return s;
}

void write_sweep(const SweepResult& result, const std::filesystem::path& dir) {
  write_text(dir / "raw.csv", raw_csv(result.raw));
  write_text(dir / "aggregated.csv", aggregate_csv(result.aggregated));
  write_text(dir / "best.csv", aggregate_csv(result.best));
}

std::vector<ContentionRow> contention_curves(const ExperimentConfig& cfg) {
  cfg.validate();
  CounterRng root(cfg.seed, 0x636f6e74ULL);
  std::uint64_t stream = 0;
  const double t_f = cfg.pmac.layout.t_f;
  auto evaluate = [&](int n, double t_cp, int w, bool optimal) {
    ContentionParams p;
    p.n_prime = n;
    p.window = w;
    p.t_cp = t_cp;
    p.t_r = cfg.t_r;
    p.t_f = t_f;
    ContentionRow r;
    r.n_prime = n;
    r.t_cp = t_cp;
    r.window = w;
    r.optimal = optimal;
    r.q_analytic = expected_successes(p);
    const DelayEstimate de = expected_delay(p);
    if (de.delay) r.d_analytic = *de.delay / t_f;
    CounterRng rng = root.split(stream++);
    const MonteCarloResult mc = monte_carlo_contention(p, cfg.contention_replications, rng);
    r.q_mc = mc.successes;
    r.q_mc_se = mc.successes_se;
    if (mc.delay) {
      r.d_mc = *mc.delay / t_f;
      r.d_mc_se = mc.delay_se / t_f;
    }
    r.replications = mc.replications;
    return r;
  };
  std::vector<ContentionRow> out;
  for (double t_cp : cfg.t_cp) {
    for (int w : cfg.windows) {
      for (int n : cfg.n_prime) out.push_back(evaluate(n, t_cp, w, false));
    }
  }
  for (int n : cfg.n_prime) {
    for (double t_cp : cfg.t_cp_curve) {
      out.push_back(evaluate(n, t_cp, optimize_window(n, t_cp, kMiniSlot, cfg.t_r), true));
    }
  }
  return out;
}

std::string contention_csv(const std::vector<ContentionRow>& rows) {
  std::string s = "n_prime,t_cp_ms,window,optimal,q_analytic,d_analytic,q_mc,q_mc_se,d_mc,d_mc_se,replications\n";
  for (const ContentionRow& r : rows) {
    s += std::to_string(r.n_prime) + "," + format_number(r.t_cp * 1e3) + "," + std::to_string(r.window) + "," +
         (r.optimal ? "1" : "0") + "," + format_number(r.q_analytic) + "," + opt(r.d_analytic) + "," +
         format_number(r.q_mc) + "," + format_number(r.q_mc_se) + "," + opt(r.d_mc) + "," +
         (r.d_mc ? format_number(r.d_mc_se) : std::string()) + "," + std::to_string(r.replications) + "\n";
  }
  return s;
}

}  // namespace pmac
