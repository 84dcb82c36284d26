#include "codessm/numerics/rng.hpp"

#include <cmath>
#include <numbers>

namespace codessm {
namespace {
constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
}  // namespace

std::uint64_t Rng::next_u64() noexcept {
  ++position_;
  return mix(seed_ + position_ * kGamma);
}

double Rng::uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::uniform_int(std::uint64_t n) noexcept {
  // Rejection on the top of the range keeps the result unbiased.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

double Rng::normal() noexcept {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::truncated_normal(double std) noexcept {
  double z;
  do {
    z = normal();
  } while (std::abs(z) > 2.0);
  return z * std;
}

Rng Rng::fork(std::uint64_t stream) const noexcept {
  return Rng(mix(seed_ ^ mix(stream + 0x632BE59BD9B4E019ULL)) + position_, 0);
}

}  // namespace codessm
