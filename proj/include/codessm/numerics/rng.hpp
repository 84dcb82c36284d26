#pragma once

#include <cstdint>

namespace codessm {

/// Counter-based SplitMix64 generator.
///
/// The output at position p is a pure function of (seed, p), so a generator
/// can be checkpointed as two integers and replayed on any platform. Only
/// integer arithmetic and explicitly written transforms are used; no
/// std::*_distribution, whose output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0, std::uint64_t position = 0) noexcept
      : seed_(seed), position_(position) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t position() const noexcept { return position_; }

  std::uint64_t next_u64() noexcept;
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform integer in [0, n); n must be > 0.
  std::uint64_t uniform_int(std::uint64_t n) noexcept;
  /// Standard normal (Box-Muller, one draw per call).
  double normal() noexcept;
  /// Normal(0, std) resampled until it falls within two standard deviations.
  double truncated_normal(double std) noexcept;
  bool bernoulli(double p) noexcept { return uniform() < p; }

  /// Independent child stream; does not advance this generator.
  Rng fork(std::uint64_t stream) const noexcept;

  friend bool operator==(const Rng&, const Rng&) = default;

 private:
  std::uint64_t seed_;
  std::uint64_t position_;
};

}  // namespace codessm
