#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "codessm/ssm/kernel.hpp"

namespace codessm::ssm {

struct SpectrumPoint {
  std::size_t freq_index = 0;
  double omega = 0.0;
  double magnitude = 0.0;
  double phase_deg = 0.0;  // in (-180, 180]
};

/// Frequency response H(omega) = M angle theta of one kernel.
struct SpectrumReport {
  int layer_index = -1;
  std::string direction;
  std::vector<SpectrumPoint> points;
};

/// Evaluates the DTFT of a real kernel at omega_k = 2 pi k / n_freq, k < n_freq.
SpectrumReport kernel_spectrum(std::span<const double> kernel, std::size_t n_freq);

template <typename T>
SpectrumReport spectrum(const KernelSpec<T>& spec, std::size_t kernel_len, std::size_t n_freq,
                        const KernelOptions& opts = {});

/// Wraps an angle in degrees into (-180, 180].
double wrap_degrees(double deg) noexcept;

/// CSV columns: layer_index,direction,freq_index,omega,magnitude,phase_deg
void write_spectrum_csv(std::ostream& os, std::span<const SpectrumReport> reports);

}  // namespace codessm::ssm
