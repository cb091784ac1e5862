#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pmac/experiment/config.hpp"
#include "pmac/sim/result.hpp"

namespace pmac {

/// One simulated (grid point, replication).
struct ResultRow {
  Protocol protocol = Protocol::pmac;
  int nodes = 0;
  double load = 0.0;
  std::optional<double> h, q;         // PMAC
  std::optional<double> r_c;          // DCF and PSM, m
  std::optional<double> atim_window;  // PSM, s
  int replication = 0;
  std::uint64_t topology_seed = 0;
  std::uint64_t run_seed = 0;
  Metrics metrics;
  std::uint64_t dropped = 0;
  Audit audit;
};

struct Summary {
  double mean = 0.0;
  double se = 0.0;  // sample standard deviation / sqrt(n); 0 for n = 1
  int n = 0;
};

Summary summarize(const std::vector<double>& xs);

struct AggregateRow {
  std::string series;  // legend label
  Protocol protocol = Protocol::pmac;
  int nodes = 0;
  double load = 0.0;
  std::optional<double> h, q, r_c, atim_window;
  int replications = 0;
  Summary throughput;
  Summary energy_per_packet;  // over replications that delivered
  Summary collision_rate;
};

struct SweepResult {
  std::vector<ResultRow> raw;
  std::vector<AggregateRow> aggregated;
  std::vector<AggregateRow> best;  // per protocol, node count and load
};

/// A sweep cell threw. Rows finished before the failure are kept, in grid order.
class SweepError : public std::runtime_error {
 public:
  SweepError(const std::string& what, std::vector<ResultRow> completed)
      : std::runtime_error(what), completed_(std::move(completed)) {}
  [[nodiscard]] const std::vector<ResultRow>& completed() const { return completed_; }

 private:
  std::vector<ResultRow> completed_;
};

using Progress = std::function<void(std::size_t done, std::size_t total)>;

/// Seeds shared by every protocol at a grid point, so comparisons are paired.
std::uint64_t topology_seed(std::uint64_t seed, int nodes, int replication);
std::uint64_t run_seed(std::uint64_t seed, int nodes, int replication, double load);

/// One run at the first value of every grid, replication 0 unless given.
ResultRow simulate_single(const ExperimentConfig& cfg, Protocol protocol, int replication = 0,
                          SimResult* full = nullptr, bool record_trace = false);

/// Every protocol × node count × parameter point × load × replication.
/// PSM cells use the DCF r_c with the highest mean throughput at the largest
/// load of the same node count when DCF is part of the sweep.
SweepResult run_sweep(const ExperimentConfig& cfg, const Progress& progress = {});

/// Groups rows by everything except the replication; first-seen order.
std::vector<AggregateRow> aggregate(const std::vector<ResultRow>& rows);
/// Highest mean throughput per (protocol, nodes, load); ties to the earlier row.
std::vector<AggregateRow> select_best(const std::vector<AggregateRow>& rows);

std::string raw_csv(const std::vector<ResultRow>& rows);
std::string aggregate_csv(const std::vector<AggregateRow>& rows);

/// raw.csv, aggregated.csv and best.csv.
void write_sweep(const SweepResult& result, const std::filesystem::path& dir);

struct ContentionRow {
  int n_prime = 0;
  double t_cp = 0.0;  // s
  int window = 0;
  bool optimal = false;  // window from optimize_window
  double q_analytic = 0.0;
  std::optional<double> d_analytic;  // frames
  double q_mc = 0.0;
  double q_mc_se = 0.0;
  std::optional<double> d_mc;  // frames
  double d_mc_se = 0.0;
  int replications = 0;
};

/// Grid rows (n_prime × window × t_cp), then optimal-window rows
/// (n_prime × t_cp_curve), each with analytic and Monte Carlo values.
std::vector<ContentionRow> contention_curves(const ExperimentConfig& cfg);
std::string contention_csv(const std::vector<ContentionRow>& rows);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string format_number(double x);

}  // namespace pmac
