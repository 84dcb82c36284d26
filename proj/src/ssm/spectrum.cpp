#include "codessm/ssm/spectrum.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

namespace codessm::ssm {

double wrap_degrees(double deg) noexcept {
  double w = std::fmod(deg, 360.0);
  if (w <= -180.0) w += 360.0;
  if (w > 180.0) w -= 360.0;
  return w;
}

SpectrumReport kernel_spectrum(std::span<const double> kernel, std::size_t n_freq) {
  if (n_freq < 2) throw SizeError("spectrum: need at least two frequencies");
  SpectrumReport report;
  report.points.reserve(n_freq);
  for (std::size_t k = 0; k < n_freq; ++k) {
    const double omega = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n_freq);
    cplx h(0.0, 0.0);
    for (std::size_t l = 0; l < kernel.size(); ++l) {
      // Reduce k*l modulo n_freq so the angle stays exact for long kernels.
      const double a = -2.0 * std::numbers::pi * static_cast<double>((k * l) % n_freq) / static_cast<double>(n_freq);
      h += kernel[l] * cplx(std::cos(a), std::sin(a));
    }
    report.points.push_back({k, omega, std::abs(h), wrap_degrees(std::arg(h) * 180.0 / std::numbers::pi)});
  }
  return report;
}

template <typename T>
SpectrumReport spectrum(const KernelSpec<T>& spec, std::size_t kernel_len, std::size_t n_freq,
                        const KernelOptions& opts) {
  const DiscreteKernel k = materialize_kernel(spec, kernel_len, opts);
  return kernel_spectrum(k.values, n_freq);
}

template SpectrumReport spectrum<float>(const KernelSpec<float>&, std::size_t, std::size_t, const KernelOptions&);
template SpectrumReport spectrum<double>(const KernelSpec<double>&, std::size_t, std::size_t, const KernelOptions&);

void write_spectrum_csv(std::ostream& os, std::span<const SpectrumReport> reports) {
  os << "layer_index,direction,freq_index,omega,magnitude,phase_deg\n";
  char line[256];
  for (const auto& r : reports) {
    for (const auto& p : r.points) {
      std::snprintf(line, sizeof line, "%d,%s,%zu,%.17g,%.17g,%.17g\n", r.layer_index, r.direction.c_str(),
                    p.freq_index, p.omega, p.magnitude, p.phase_deg);
      os << line;
    }
  }
}

}  // namespace codessm::ssm
