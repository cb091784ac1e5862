#pragma once

#include <cstdint>
#include <limits>

namespace pmac {

/// Counter-based 64-bit generator.
///
/// Output i of a stream is the SplitMix64 finalizer applied to
/// `key + (i + 1) * 0x9E3779B97F4A7C15`, where `key` is derived from the run
/// seed and a stream id. Streams are split by hashing (parent key, stream id),
/// so per-node streams are independent of how many draws other nodes make.
///
/// The distribution helpers are implemented here rather than through
/// <random> distributions, whose algorithms differ between standard
/// libraries; this keeps traces identical across platforms.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

  /// Independent child stream. Does not advance this generator.
  [[nodiscard]] CounterRng split(std::uint64_t stream) const;

  std::uint64_t next();
  result_type operator()() { return next(); }
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  /// Uniform double in [0, 1) with 53 bits of resolution.
  double uniform();
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_int(std::uint64_t n);
  /// Exponential variate with the given rate (1/mean).
  double exponential(double rate);

  [[nodiscard]] std::uint64_t key() const { return key_; }
  [[nodiscard]] std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t z);

}  // namespace pmac
