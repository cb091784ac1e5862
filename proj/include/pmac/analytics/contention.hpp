#pragma once

#include <cstdint>
#include <optional>

#include "pmac/core/rng.hpp"

namespace pmac {

inline constexpr double kMiniSlot = 20e-6;     // s
inline constexpr double kRequestTime = 240e-6;  // s, preamble + one request entry, rounded to mini-slots

struct ContentionParams {
  int n_prime = 1;             // contenders within carrier-sense range
  int window = 32;             // W
  double t_cp = 2e-3;          // total contention time per frame, s
  double t_s = kMiniSlot;
  double t_r = kRequestTime;
  double t_f = 0.1;            // frame, s

  /// Throws ValidationError on W < 1, N' < 0, T_cp < 0, t_s <= 0 or T_r <= 0.
  void validate() const;
};

struct SlotProbabilities {
  double delta_i = 1.0;
  double delta_s = 0.0;
  double delta_c = 0.0;
  bool degenerate = false;  // N' = 0
};

SlotProbabilities slot_probabilities(int n_prime, int window);

struct CycleStats {
  double mean_idle = 0.0;   // m̄, mini-slots per cycle
  double mean_cycle = 0.0;  // T̄_cy, s
};

/// Throws ValidationError for N' = 0.
CycleStats mean_cycle(const ContentionParams& p);

double expected_successes(const ContentionParams& p);

struct DelayEstimate {
  std::optional<double> delay;  // empty when no request can succeed
  double success_prob = 0.0;    // per-frame success probability of one contender
};

DelayEstimate expected_delay(const ContentionParams& p);

inline constexpr int kMaxWindow = 1024;

/// Integer W in [1, w_max] maximising the expected successes; ties go to the
/// smaller window.
int optimize_window(int n_prime, double t_cp, double t_s = kMiniSlot, double t_r = kRequestTime,
                    int w_max = kMaxWindow);

/// Invert the idle probability for the contender count. Falls back to the
/// success probability when the idle fraction is 0 or 1.
int estimate_contenders(const SlotProbabilities& observed, int w_prev);

/// Exponentially smoothed estimator fed with one frame of monitored mini-slots.
class ContenderEstimator {
 public:
  explicit ContenderEstimator(double weight = 0.5) : weight_(weight) {}
  int observe(int idle, int success, int collision, int w_prev);
  [[nodiscard]] int estimate() const;
  [[nodiscard]] bool primed() const { return primed_; }

 private:
  double weight_;
  double smoothed_ = 0.0;
  bool primed_ = false;
};

struct SlotSizing {
  int slots = 1;
  int window = 1;
  bool feasible = true;
};

/// Smallest number of contention slots whose expected delay meets the target.
/// Returns the cap with feasible = false when even the cap misses the target.
SlotSizing size_contention_slots(int n_hat, double target_delay, double slot_len, int cap,
                                 double t_f = 0.1, double t_s = kMiniSlot, double t_r = kRequestTime);

struct MonteCarloResult {
  double successes = 0.0;  // mean per frame
  double successes_se = 0.0;
  std::optional<double> delay;
  double delay_se = 0.0;
  int replications = 0;
};

/// Mini-slot simulation of one frame's contention phase, repeated.
/// Backoffs are drawn uniformly from [0, W-1] each frame. Every idle mini-slot
/// decrements all waiting counters; a contender whose counter is zero fires at
/// the end of that mini-slot, and counters freeze while the channel is busy. A request succeeds when exactly one contender
/// starts in a mini-slot and the request ends within T_cp.
MonteCarloResult monte_carlo_contention(const ContentionParams& p, int replications, CounterRng& rng);

/// Successful requests in one replication; exposed for the protocol engine.
int contention_round(const ContentionParams& p, CounterRng& rng);

}  // namespace pmac
