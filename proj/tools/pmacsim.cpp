// pmacsim: single runs, sweeps, contention curves and plots.
//
// Exit codes: 0 success, 2 invalid configuration or arguments, 3 runtime failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "pmac/core/error.hpp"
#include "pmac/experiment/config.hpp"
#include "pmac/experiment/plot.hpp"
#include "pmac/experiment/sweep.hpp"

namespace fs = std::filesystem;
using namespace pmac;

namespace {

constexpr int kValidation = 2;
constexpr int kRuntime = 3;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::optional<int> parallel;
  std::optional<std::string> protocol;
};

ExperimentConfig load(const Options& o) {
  ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : parse_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.parallel) cfg.parallel = *o.parallel;
  if (o.protocol) cfg.protocols = {parse_protocol(*o.protocol)};
  cfg.validate();
  return cfg;
}

void print_row(const ResultRow& r) {
  std::printf("%s nodes=%d load=%s throughput=%s energy_per_packet=%s collision_rate=%s delivered=%llu\n",
              to_string(r.protocol), r.nodes, format_number(r.load).c_str(), format_number(r.metrics.throughput).c_str(),
              r.metrics.energy_per_packet ? format_number(*r.metrics.energy_per_packet).c_str() : "n/a",
              format_number(r.metrics.collision_rate).c_str(),
              static_cast<unsigned long long>(r.metrics.counts.delivered));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PMAC, DCF and PSM simulation experiments"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config, "key = value configuration file")->envname("PMACSIM_CONFIG");
  app.add_option("--seed", o.seed, "base seed")->envname("PMACSIM_SEED");
  app.add_option("--out", o.out, "output directory")->envname("PMACSIM_OUT")->capture_default_str();
  app.add_option("--parallel", o.parallel, "concurrent simulations")->envname("PMACSIM_PARALLEL");
  app.add_option("--protocol", o.protocol, "restrict to one protocol")
      ->envname("PMACSIM_PROTOCOL")
      ->check(CLI::IsMember({"pmac", "dcf", "psm"}));

  auto* simulate = app.add_subcommand("simulate", "one run at the first value of every grid");
  bool trace = false;
  int replication = 0;
  simulate->add_flag("--trace", trace, "also write trace.csv");
  simulate->add_option("--replication", replication, "topology and traffic replication")->check(CLI::NonNegativeNumber);

  auto* sweep = app.add_subcommand("sweep", "every grid point and replication; raw, aggregated and best CSV");
  bool quiet = false;
  sweep->add_flag("--quiet", quiet, "no progress on stderr");

  auto* contention = app.add_subcommand("contention", "analytic and Monte Carlo contention curves");

  auto* plot = app.add_subcommand("plot", "render an SVG figure from a CSV");
  std::string csv, kind, output;
  plot->add_option("--csv", csv, "input CSV")->required();
  plot->add_option("--kind", kind, "throughput, energy, collision, density or contention")->required();
  plot->add_option("--output", output, "SVG path (default <out>/<kind>.svg)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kValidation;
  }

  try {
    const fs::path out(o.out);
    if (plot->parsed()) {
      const FigureKind k = parse_figure_kind(kind);
      const fs::path dest = output.empty() ? out / (std::string(to_string(k)) + ".svg") : fs::path(output);
      emit_plot(csv, k, dest);
      std::printf("wrote %s\n", dest.string().c_str());
      return 0;
    }

    const ExperimentConfig cfg = load(o);
    write_text(out / "config.echo.txt", echo_config(cfg));

    if (simulate->parsed()) {
      const Protocol p = cfg.protocols.front();
      SimResult full;
      const ResultRow row = simulate_single(cfg, p, replication, &full, trace);
      write_text(out / "simulate.csv", raw_csv({row}));
      if (trace) write_text(out / "trace.csv", "time_us,node,peer,kind,slot,packet\n" + format_trace(full.trace));
      print_row(row);
      if (full.audit.total() != 0) {
        std::fprintf(stderr, "invariant audit reported %llu violations\n",
                     static_cast<unsigned long long>(full.audit.total()));
        return kRuntime;
      }
      return 0;
    }

    if (sweep->parsed()) {
      Progress progress;
      if (!quiet) {
        progress = [](std::size_t done, std::size_t total) {
          std::fprintf(stderr, "\r%zu/%zu runs", done, total);
          if (done == total) std::fprintf(stderr, "\n");
        };
      }
      try {
        const SweepResult r = run_sweep(cfg, progress);
        write_sweep(r, out);
        for (const AggregateRow& b : r.best) {
          std::printf("%s nodes=%d load=%s throughput=%s collision_rate=%s\n", b.series.c_str(), b.nodes,
                      format_number(b.load).c_str(), format_number(b.throughput.mean).c_str(),
                      format_number(b.collision_rate.mean).c_str());
        }
      } catch (const SweepError& e) {
        write_text(out / "raw.partial.csv", raw_csv(e.completed()));
        throw;
      }
      return 0;
    }

    if (contention->parsed()) {
      write_text(out / "contention.csv", contention_csv(contention_curves(cfg)));
      std::printf("wrote %s\n", (out / "contention.csv").string().c_str());
      return 0;
    }
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return kValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntime;
  }
  return 0;
}
