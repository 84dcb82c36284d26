#include "codessm/numerics/fft.hpp"

#include <bit>
#include <cmath>
#include <map>
#include <numbers>
#include <string>

namespace codessm {

ComplexVector::ComplexVector(std::vector<double> r, std::vector<double> i) : re(std::move(r)), im(std::move(i)) {
  if (re.size() != im.size()) throw SizeError("ComplexVector: re/im length mismatch");
}

bool is_power_of_two(std::size_t n) noexcept { return n != 0 && std::has_single_bit(n); }

std::size_t next_power_of_two(std::size_t n) noexcept { return n <= 1 ? 1 : std::bit_ceil(n); }

namespace {

// Twiddles e^{-2 pi i k / n} for k < n/2, cached per size for this thread.
const std::vector<cplx>& twiddles(std::size_t n) {
  thread_local std::map<std::size_t, std::vector<cplx>> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<cplx> w(n / 2);
  for (std::size_t k = 0; k < n / 2; ++k) {
    const double a = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    w[k] = {std::cos(a), std::sin(a)};
  }
  return cache.emplace(n, std::move(w)).first->second;
}

}  // namespace

void fft_inplace(std::span<cplx> data, bool inverse) {
  const std::size_t n = data.size();
  if (!is_power_of_two(n)) throw SizeError("fft: length " + std::to_string(n) + " is not a power of two");
  if (n == 1) return;

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }

  const auto& w = twiddles(n);
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t stride = n / len;
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        cplx tw = w[k * stride];
        if (inverse) tw = std::conj(tw);
        const cplx a = data[start + k];
        const cplx b = data[start + k + half] * tw;
        data[start + k] = a + b;
        data[start + k + half] = a - b;
      }
    }
  }

  if (inverse) {
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& x : data) x *= scale;
  }
}

ComplexVector fft(const ComplexVector& v, bool inverse) {
  std::vector<cplx> buf(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) buf[k] = v[k];
  fft_inplace(buf, inverse);
  ComplexVector out(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) out.set(k, buf[k]);
  return out;
}

}  // namespace codessm
