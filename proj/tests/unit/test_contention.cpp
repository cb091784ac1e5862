#include <cmath>

#include "doctest.h"
#include "pmac/analytics/contention.hpp"
#include "pmac/core/error.hpp"

using namespace pmac;

namespace {
ContentionParams params(int n, int w, double t_cp, double t_r = kRequestTime) {
  ContentionParams p;
  p.n_prime = n;
  p.window = w;
  p.t_cp = t_cp;
  p.t_r = t_r;
  return p;
}
}  // namespace

TEST_CASE("slot probabilities") {
  const SlotProbabilities sp = slot_probabilities(10, 32);
  // (31/32)^10 and friends, evaluated independently.
  CHECK(sp.delta_i == doctest::Approx(0.7279761566721286).epsilon(1e-13));
  CHECK(sp.delta_s == doctest::Approx(0.2348310182813318).epsilon(1e-13));
  CHECK(sp.delta_c == doctest::Approx(0.037192825046539646).epsilon(1e-11));

  for (int w : {1, 2, 8, 32, 128}) {
    const SlotProbabilities one = slot_probabilities(1, w);
    CHECK(one.delta_s == doctest::Approx(1.0 / w));
    CHECK(one.delta_c == doctest::Approx(0.0));
    for (int n : {1, 2, 5, 40, 300}) {
      const SlotProbabilities s = slot_probabilities(n, w);
      CHECK(std::abs(s.delta_i + s.delta_s + s.delta_c - 1.0) < 1e-12);
      CHECK(s.delta_c >= 0.0);
    }
  }
  const SlotProbabilities none = slot_probabilities(0, 16);
  CHECK(none.degenerate);
  CHECK(none.delta_i == 1.0);
  CHECK_THROWS_AS(slot_probabilities(3, 0), ValidationError);
}

TEST_CASE("mean cycle") {
  const CycleStats cs = mean_cycle(params(10, 32, 1e-3));
  CHECK(cs.mean_idle == doctest::Approx(3.6761483396685044).epsilon(1e-12));
  CHECK(cs.mean_cycle == doctest::Approx(3.6761483396685044 * 20e-6 + 240e-6).epsilon(1e-12));
  CHECK(mean_cycle(params(5000, 8, 1e-3)).mean_idle == doctest::Approx(1.0));
  CHECK_THROWS_AS(mean_cycle(params(0, 8, 1e-3)), ValidationError);
}

TEST_CASE("mean idle run matches a geometric sampler") {
  const SlotProbabilities sp = slot_probabilities(10, 32);
  CounterRng rng(77);
  double total = 0.0;
  const int samples = 1000000;
  for (int k = 0; k < samples; ++k) {
    int m = 1;
    while (rng.uniform() < sp.delta_i) ++m;
    total += m;
  }
  CHECK(total / samples == doctest::Approx(mean_cycle(params(10, 32, 1e-3)).mean_idle).epsilon(0.01));
}

TEST_CASE("expected successes") {
  CHECK(expected_successes(params(10, 32, 1e-3, 120e-6)) == doctest::Approx(4.460833110724908).epsilon(1e-12));
  CHECK(expected_successes(params(10, 32, 1e-3)) == doctest::Approx(2.753462263983135).epsilon(1e-12));
  CHECK(expected_successes(params(10, 32, 0.0)) == 0.0);
  CHECK(expected_successes(params(0, 32, 1e-3)) == 0.0);
  // Lone contender with a generous budget: W / m̄ = 1.
  CHECK(expected_successes(params(1, 4, 1.0)) == doctest::Approx(1.0));
}

TEST_CASE("expected successes never exceed contenders or channel time") {
  for (int n : {1, 2, 5, 10, 20, 40, 100}) {
    for (int w : {1, 2, 8, 16, 32, 64, 128, 512}) {
      for (double t_cp : {0.5e-3, 1e-3, 2e-3, 4e-3, 8e-3}) {
        const ContentionParams p = params(n, w, t_cp);
        const double q = expected_successes(p);
        CHECK(q <= n + 1e-12);
        CHECK(q <= t_cp / p.t_r + 1e-12);
        const DelayEstimate de = expected_delay(p);
        if (q > 0.0) {
          REQUIRE(de.delay.has_value());
          CHECK(de.success_prob > 0.0);
          CHECK(de.success_prob <= 1.0);
          CHECK(*de.delay * (q / n) == doctest::Approx(p.t_f));
        }
      }
    }
  }
}

TEST_CASE("successes are unimodal in the window") {
  for (int n : {2, 5, 10, 20, 40}) {
    double prev = -1.0;
    bool falling = false;
    for (int w = 1; w <= 512; ++w) {
      const double q = expected_successes(params(n, w, 2e-3));
      if (q < prev - 1e-12) falling = true;
      if (falling) CHECK(q <= prev + 1e-12);
      prev = q;
    }
  }
}

TEST_CASE("expected delay") {
  ContentionParams p = params(10, 32, 1e-3);
  const DelayEstimate de = expected_delay(p);
  REQUIRE(de.delay.has_value());
  CHECK(*de.delay == doctest::Approx(0.1 * 10 / 2.753462263983135));
  CHECK_FALSE(expected_delay(params(10, 32, 0.0)).delay.has_value());
}

TEST_CASE("per-frame geometric trials reproduce the expected delay") {
  const ContentionParams p = params(10, 32, 2e-3);
  const DelayEstimate de = expected_delay(p);
  CounterRng rng(3);
  double total = 0.0;
  const int trials = 100000;
  for (int k = 0; k < trials; ++k) {
    int frames = 1;
    while (rng.uniform() >= de.success_prob) ++frames;
    total += frames * p.t_f;
  }
  CHECK(total / trials == doctest::Approx(*de.delay).epsilon(0.02));
}

TEST_CASE("window optimisation") {
  CHECK(optimize_window(1, 1e-3) == 1);
  for (int n : {2, 10, 40}) {
    int brute = 1;
    double best = -1.0;
    for (int w = 1; w <= kMaxWindow; ++w) {
      const double q = expected_successes(params(n, w, 1e-3));
      if (q > best * (1.0 + 1e-12)) {
        best = q;
        brute = w;
      }
    }
    CHECK(optimize_window(n, 1e-3) == brute);
  }
  // Once the window bound dominates the time bound the optimum grows with N'.
  // Below that point the time bound pulls W* down as N' rises.
  CHECK(optimize_window(2, 2e-3) > optimize_window(6, 2e-3));
  for (double t_cp : {1e-3, 2e-3, 4e-3}) {
    int prev = 1;
    for (int n = 16; n <= 60; ++n) {
      const int w = optimize_window(n, t_cp);
      CHECK(w >= prev);
      prev = w;
    }
  }
}

TEST_CASE("contender estimation") {
  SlotProbabilities exact = slot_probabilities(10, 32);
  CHECK(estimate_contenders(exact, 32) == 10);
  SlotProbabilities idle;
  CHECK(estimate_contenders(idle, 32) == 0);
  SlotProbabilities busy{0.0, slot_probabilities(30, 8).delta_s, 0.0, false};
  busy.delta_c = 1.0 - busy.delta_s;
  CHECK(estimate_contenders(busy, 8) == 30);
}

TEST_CASE("noisy estimates from 50 mini-slots stay close to the truth") {
  CounterRng rng(99);
  const int truth = 10, w = 32, trials = 2000;
  int within = 0;
  for (int k = 0; k < trials; ++k) {
    int idle = 0, succ = 0, coll = 0;
    for (int slot = 0; slot < 50; ++slot) {
      int firing = 0;
      for (int n = 0; n < truth; ++n) firing += rng.uniform_int(w) == 0 ? 1 : 0;
      (firing == 0 ? idle : firing == 1 ? succ : coll) += 1;
    }
    ContenderEstimator est;
    if (std::abs(est.observe(idle, succ, coll, w) - truth) <= 2) ++within;
  }
  // A single frame of 50 mini-slots gives roughly 2/3 of estimates within +-2.
  CHECK(static_cast<double>(within) / trials >= 0.6);
}

TEST_CASE("smoothing halves the step towards a new observation") {
  ContenderEstimator est;
  est.observe(100, 0, 0, 32);
  CHECK(est.estimate() == 0);
  const SlotProbabilities sp = slot_probabilities(20, 32);
  est.observe(static_cast<int>(std::lround(sp.delta_i * 1e6)), static_cast<int>(std::lround(sp.delta_s * 1e6)),
              static_cast<int>(std::lround(sp.delta_c * 1e6)), 32);
  CHECK(est.estimate() == 10);
}

TEST_CASE("contention slot sizing") {
  const SlotSizing zero = size_contention_slots(0, 0.3, 1e-3, 10);
  CHECK(zero.slots == 1);
  CHECK(zero.feasible);

  const SlotSizing s = size_contention_slots(20, 0.3, 1e-3, 10);
  int brute = -1;
  for (int k = 1; k <= 10 && brute < 0; ++k) {
    const ContentionParams p = params(20, optimize_window(20, k * 1e-3), k * 1e-3);
    if (*expected_delay(p).delay <= 0.3) brute = k;
  }
  CHECK(s.slots == brute);
  CHECK(s.feasible);

  int prev = 1000;
  for (double target : {0.1, 0.15, 0.2, 0.3, 0.5, 1.0, 3.0}) {
    const SlotSizing z = size_contention_slots(30, target, 1e-3, 20);
    CHECK(z.slots <= prev);
    prev = z.slots;
  }
  const SlotSizing capped = size_contention_slots(200, 0.1, 1e-3, 3);
  CHECK(capped.slots == 3);
  CHECK_FALSE(capped.feasible);
  CHECK_THROWS_AS(size_contention_slots(5, 0.05, 1e-3, 3), ValidationError);
}

TEST_CASE("monte carlo oracle") {
  CounterRng rng(1);
  const MonteCarloResult one = monte_carlo_contention(params(1, 16, 1e-3), 1000, rng);
  CHECK(one.successes == 1.0);

  CounterRng a(5), b(5);
  const MonteCarloResult ra = monte_carlo_contention(params(10, 32, 2e-3), 500, a);
  const MonteCarloResult rb = monte_carlo_contention(params(10, 32, 2e-3), 500, b);
  CHECK(ra.successes == rb.successes);
  CHECK(ra.successes_se == rb.successes_se);

  // Exact means from enumerating every backoff vector with a slot-by-slot
  // reference process.
  struct Case {
    int n, w;
    double t_cp, mean;
  };
  for (const Case& k : {Case{3, 4, 0.8e-3, 1.6875}, Case{4, 8, 1e-3, 2.26953125}, Case{5, 6, 1.1e-3, 2.318672839506173},
                        Case{6, 5, 1e-3, 1.49376}}) {
    CounterRng c(static_cast<std::uint64_t>(k.n * 100 + k.w));
    const MonteCarloResult mc = monte_carlo_contention(params(k.n, k.w, k.t_cp), 40000, c);
    CHECK(std::abs(mc.successes - k.mean) < 4.0 * mc.successes_se);
  }
}
