#include "pmac/analytics/contention.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "pmac/core/error.hpp"

namespace pmac {

void ContentionParams::validate() const {
  if (window < 1) throw ValidationError("contention window must be at least 1");
  if (n_prime < 0) throw ValidationError("contender count must be non-negative");
  if (!(t_cp >= 0.0)) throw ValidationError("contention time must be non-negative");
  if (!(t_s > 0.0)) throw ValidationError("mini-slot must be positive");
  if (!(t_r > 0.0)) throw ValidationError("request duration must be positive");
  if (!(t_f > 0.0)) throw ValidationError("frame length must be positive");
}

SlotProbabilities slot_probabilities(int n_prime, int window) {
  if (window < 1) throw ValidationError("contention window must be at least 1");
  if (n_prime < 0) throw ValidationError("contender count must be non-negative");
  SlotProbabilities sp;
  if (n_prime == 0) {
    sp.degenerate = true;
    return sp;
  }
  const double q = 1.0 - 1.0 / window;
  const double n = n_prime;
  sp.delta_i = std::pow(q, n);
  sp.delta_s = n / window * std::pow(q, n - 1.0);
  sp.delta_c = std::max(0.0, 1.0 - sp.delta_i - sp.delta_s);
  return sp;
}

CycleStats mean_cycle(const ContentionParams& p) {
  p.validate();
  if (p.n_prime == 0) throw ValidationError("no contention cycles with zero contenders");
  const SlotProbabilities sp = slot_probabilities(p.n_prime, p.window);
  CycleStats cs;
  cs.mean_idle = 1.0 / (1.0 - sp.delta_i);
  cs.mean_cycle = cs.mean_idle * p.t_s + p.t_r;
  return cs;
}

double expected_successes(const ContentionParams& p) {
  p.validate();
  if (p.n_prime == 0 || p.t_cp == 0.0) return 0.0;
  const SlotProbabilities sp = slot_probabilities(p.n_prime, p.window);
  const CycleStats cs = mean_cycle(p);
  const double cycles = std::min(p.window / cs.mean_idle, p.t_cp / cs.mean_cycle);
  return cycles * sp.delta_s / (sp.delta_s + sp.delta_c);
}

DelayEstimate expected_delay(const ContentionParams& p) {
  DelayEstimate de;
  const double q = expected_successes(p);
  if (!(q > 0.0)) return de;
  de.success_prob = std::min(1.0, q / p.n_prime);
  de.delay = p.t_f * p.n_prime / q;
  return de;
}

int optimize_window(int n_prime, double t_cp, double t_s, double t_r, int w_max) {
  if (n_prime < 1) throw ValidationError("window optimisation needs at least one contender");
  if (w_max < 1) throw ValidationError("maximum window must be at least 1");
  ContentionParams p;
  p.n_prime = n_prime;
  p.t_cp = t_cp;
  p.t_s = t_s;
  p.t_r = t_r;
  int best_w = 1;
  double best_q = -1.0;
  for (int w = 1; w <= w_max; ++w) {
    p.window = w;
    const double q = expected_successes(p);
    if (q > best_q * (1.0 + 1e-12)) {
      best_q = q;
      best_w = w;
    }
  }
  return best_w;
}

int estimate_contenders(const SlotProbabilities& observed, int w_prev) {
  if (w_prev < 1) throw ValidationError("previous window must be at least 1");
  const double di = observed.delta_i;
  if (di >= 1.0) return 0;
  if (w_prev == 1) return observed.delta_s > 0.0 && observed.delta_c == 0.0 ? 1 : 2;
  const double lq = std::log(1.0 - 1.0 / w_prev);
  if (di > 0.0) return static_cast<int>(std::lround(std::log(di) / lq));
  // All mini-slots busy: solve delta_s(n) = observed on the decreasing branch.
  if (observed.delta_s <= 0.0) return 2 * w_prev;
  int best = 1;
  double best_err = 1e300;
  for (int n = 1; n <= 8 * w_prev; ++n) {
    const double err = std::abs(slot_probabilities(n, w_prev).delta_s - observed.delta_s);
    if (err < best_err) {
      best_err = err;
      best = n;
    }
  }
  return best;
}

int ContenderEstimator::observe(int idle, int success, int collision, int w_prev) {
  const int total = idle + success + collision;
  if (total <= 0) return estimate();
  SlotProbabilities sp;
  sp.delta_i = static_cast<double>(idle) / total;
  sp.delta_s = static_cast<double>(success) / total;
  sp.delta_c = static_cast<double>(collision) / total;
  const double n = estimate_contenders(sp, w_prev);
  smoothed_ = primed_ ? weight_ * n + (1.0 - weight_) * smoothed_ : n;
  primed_ = true;
  return estimate();
}

int ContenderEstimator::estimate() const { return static_cast<int>(std::lround(smoothed_)); }

SlotSizing size_contention_slots(int n_hat, double target_delay, double slot_len, int cap, double t_f,
                                 double t_s, double t_r) {
  if (cap < 1) throw ValidationError("contention slot cap must be at least 1");
  if (!(target_delay >= t_f)) throw ValidationError("target delay must be at least one frame");
  SlotSizing out;
  if (n_hat <= 0) return out;
  for (int s = 1; s <= cap; ++s) {
    ContentionParams p;
    p.n_prime = n_hat;
    p.t_cp = s * slot_len;
    p.t_s = t_s;
    p.t_r = t_r;
    p.t_f = t_f;
    p.window = optimize_window(n_hat, p.t_cp, t_s, t_r);
    const DelayEstimate de = expected_delay(p);
    out.slots = s;
    out.window = p.window;
    if (de.delay && *de.delay <= target_delay) return out;
  }
  out.feasible = false;
  return out;
}

int contention_round(const ContentionParams& p, CounterRng& rng) {
  if (p.n_prime == 0) return 0;
  std::vector<std::uint32_t> backoff(static_cast<std::size_t>(p.n_prime));
  for (auto& b : backoff) b = static_cast<std::uint32_t>(rng.uniform_int(static_cast<std::uint64_t>(p.window)));
  std::sort(backoff.begin(), backoff.end());
  const auto ts = static_cast<std::int64_t>(std::llround(p.t_s * 1e9));
  const auto tr = static_cast<std::int64_t>(std::llround(p.t_r * 1e9));
  const auto tcp = static_cast<std::int64_t>(std::llround(p.t_cp * 1e9));
  std::int64_t t = 0;
  std::int64_t elapsed = -1;  // backoff value of the previous firing group
  int successes = 0;
  std::size_t i = 0;
  while (i < backoff.size()) {
    const std::uint32_t v = backoff[i];
    std::size_t j = i;
    while (j < backoff.size() && backoff[j] == v) ++j;
    t += (static_cast<std::int64_t>(v) - elapsed) * ts + tr;
    if (t > tcp) break;
    if (j - i == 1) ++successes;
    elapsed = v;
    i = j;
  }
  return successes;
}

MonteCarloResult monte_carlo_contention(const ContentionParams& p, int replications, CounterRng& rng) {
  p.validate();
  if (replications < 1) throw ValidationError("replications must be at least 1");
  MonteCarloResult r;
  r.replications = replications;
  double sum = 0.0, sum_sq = 0.0;
  for (int k = 0; k < replications; ++k) {
    const double q = contention_round(p, rng);
    sum += q;
    sum_sq += q * q;
  }
  const double n = replications;
  r.successes = sum / n;
  const double var = replications > 1 ? std::max(0.0, (sum_sq - n * r.successes * r.successes) / (n - 1.0)) : 0.0;
  r.successes_se = std::sqrt(var / n);
  if (r.successes > 0.0) {
    r.delay = p.t_f * p.n_prime / r.successes;
    r.delay_se = *r.delay * r.successes_se / r.successes;
  }
  return r;
}

}  // namespace pmac
