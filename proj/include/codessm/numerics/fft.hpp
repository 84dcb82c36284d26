#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "codessm/numerics/tensor.hpp"

namespace codessm {

using cplx = std::complex<double>;

/// Split real/imaginary storage, 64-bit.
struct ComplexVector {
  std::vector<double> re;
  std::vector<double> im;

  ComplexVector() = default;
  explicit ComplexVector(std::size_t n) : re(n, 0.0), im(n, 0.0) {}
  ComplexVector(std::vector<double> r, std::vector<double> i);

  std::size_t size() const noexcept { return re.size(); }
  cplx operator[](std::size_t k) const { return {re[k], im[k]}; }
  void set(std::size_t k, cplx v) {
    re[k] = v.real();
    im[k] = v.imag();
  }
};

bool is_power_of_two(std::size_t n) noexcept;
std::size_t next_power_of_two(std::size_t n) noexcept;

/// In-place radix-2 transform. The inverse is scaled by 1/n.
/// Throws SizeError unless the length is a power of two.
void fft_inplace(std::span<cplx> data, bool inverse);

ComplexVector fft(const ComplexVector& v, bool inverse = false);

}  // namespace codessm
