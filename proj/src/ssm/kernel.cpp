#include "codessm/ssm/kernel.hpp"

#include <cmath>
#include <numbers>

namespace codessm::ssm {

template <typename T>
KernelSpec<T>::KernelSpec(std::size_t state_size)
    : lambda_log_neg_re({state_size}),
      lambda_im({state_size}),
      b_re({state_size}),
      b_im({state_size}),
      c_re({state_size}),
      c_im({state_size}),
      log_delta({1}) {}

template <typename T>
cplx KernelSpec<T>::lambda(std::size_t n) const {
  return {-std::exp(static_cast<double>(lambda_log_neg_re[n])), static_cast<double>(lambda_im[n])};
}

template <typename T>
double KernelSpec<T>::delta() const {
  return std::exp(static_cast<double>(log_delta[0]));
}

template <typename T>
KernelSpec<T> KernelSpec<T>::from_complex(const std::vector<cplx>& lambda, const std::vector<cplx>& b,
                                          const std::vector<cplx>& c, double delta) {
  const std::size_t n = lambda.size();
  if (b.size() != n || c.size() != n) throw SizeError("KernelSpec::from_complex: Lambda/B/C length mismatch");
  if (!(delta > 0)) throw SizeError("KernelSpec::from_complex: step size must be positive");
  KernelSpec s(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(lambda[i].real() < 0)) throw NumericError("KernelSpec::from_complex: Re(Lambda) must be negative");
    s.lambda_log_neg_re[i] = static_cast<T>(std::log(-lambda[i].real()));
    s.lambda_im[i] = static_cast<T>(lambda[i].imag());
    s.b_re[i] = static_cast<T>(b[i].real());
    s.b_im[i] = static_cast<T>(b[i].imag());
    s.c_re[i] = static_cast<T>(c[i].real());
    s.c_im[i] = static_cast<T>(c[i].imag());
  }
  s.log_delta[0] = static_cast<T>(std::log(delta));
  return s;
}

template <typename T>
template <typename U>
KernelSpec<U> KernelSpec<T>::cast() const {
  KernelSpec<U> out;
  out.lambda_log_neg_re = lambda_log_neg_re.template cast<U>();
  out.lambda_im = lambda_im.template cast<U>();
  out.b_re = b_re.template cast<U>();
  out.b_im = b_im.template cast<U>();
  out.c_re = c_re.template cast<U>();
  out.c_im = c_im.template cast<U>();
  out.log_delta = log_delta.template cast<U>();
  return out;
}

template <typename T>
KernelSpec<T> init_s4d_lin(std::size_t state_size, Rng& rng, double dt_min, double dt_max) {
  KernelSpec<T> s(state_size);
  const double c_std = std::sqrt(0.5);
  for (std::size_t n = 0; n < state_size; ++n) {
    s.lambda_log_neg_re[n] = static_cast<T>(std::log(0.5));
    s.lambda_im[n] = static_cast<T>(std::numbers::pi * static_cast<double>(n));
    s.b_re[n] = T(1);
    s.b_im[n] = T(0);
    s.c_re[n] = static_cast<T>(rng.normal() * c_std);
    s.c_im[n] = static_cast<T>(rng.normal() * c_std);
  }
  const double u = rng.uniform();
  s.log_delta[0] = static_cast<T>(std::log(dt_min) + u * (std::log(dt_max) - std::log(dt_min)));
  return s;
}

namespace {

// Per-mode discretization with the partial derivatives needed for backprop.
// B_bar = q * B.
struct ModeTerms {
  cplx z, q;
  cplx dz_dlam, dz_ddelta, dq_dlam, dq_ddelta;
};

ModeTerms mode_terms(cplx lam, double delta, Discretization rule) {
  ModeTerms t;
  if (rule == Discretization::ZeroOrderHold) {
    if (lam == cplx(0.0, 0.0)) throw NumericError("discretize: Lambda_n == 0 makes zero-order hold singular");
    t.z = std::exp(delta * lam);
    t.q = (t.z - 1.0) / lam;
    t.dz_dlam = delta * t.z;
    t.dz_ddelta = lam * t.z;
    t.dq_dlam = (delta * t.z * lam - (t.z - 1.0)) / (lam * lam);
    t.dq_ddelta = t.z;
  } else {
    const cplx den = 1.0 - 0.5 * delta * lam;
    const cplx den2 = den * den;
    t.z = (1.0 + 0.5 * delta * lam) / den;
    t.q = delta / den;
    t.dz_dlam = delta / den2;
    t.dz_ddelta = lam / den2;
    t.dq_dlam = 0.5 * delta * delta / den2;
    t.dq_ddelta = 1.0 / den2;
  }
  return t;
}

}  // namespace

template <typename T>
Discretized discretize(const KernelSpec<T>& spec, Discretization rule) {
  const std::size_t n = spec.state_size();
  Discretized d{ComplexVector(n), ComplexVector(n)};
  const double delta = spec.delta();
  for (std::size_t i = 0; i < n; ++i) {
    const ModeTerms t = mode_terms(spec.lambda(i), delta, rule);
    d.a_bar.set(i, t.z);
    d.b_bar.set(i, t.q * spec.b(i));
  }
  return d;
}

template <typename T>
DiscreteKernel materialize_kernel(const KernelSpec<T>& spec, std::size_t length, const KernelOptions& opts) {
  const Discretized d = discretize(spec, opts.discretization);
  DiscreteKernel k;
  k.state_size = spec.state_size();
  k.values.assign(length, 0.0);
  const double f = opts.output_factor();
  for (std::size_t n = 0; n < spec.state_size(); ++n) {
    const cplx z = d.a_bar[n];
    cplx term = spec.c(n) * d.b_bar[n];
    for (std::size_t l = 0; l < length; ++l) {
      k.values[l] += f * term.real();
      term *= z;
    }
  }
  return k;
}

namespace {

// Channel pairs (a, b) are packed as a + ib into one complex transform;
// the kernel is real, so real and imaginary outputs stay separate.
template <typename T>
void load_pair(const T* base, std::size_t len, std::size_t d, std::size_t c, std::span<cplx> buf) {
  const bool has_b = c + 1 < d;
  std::fill(buf.begin(), buf.end(), cplx(0.0, 0.0));
  for (std::size_t t = 0; t < len; ++t) {
    const double a = static_cast<double>(base[t * d + c]);
    const double b = has_b ? static_cast<double>(base[t * d + c + 1]) : 0.0;
    buf[t] = {a, b};
  }
}

template <typename T>
void store_pair(std::span<const cplx> buf, std::size_t len, std::size_t d, std::size_t c, T* base) {
  const bool has_b = c + 1 < d;
  for (std::size_t t = 0; t < len; ++t) {
    base[t * d + c] = static_cast<T>(buf[t].real());
    if (has_b) base[t * d + c + 1] = static_cast<T>(buf[t].imag());
  }
}

struct ConvGeometry {
  std::size_t batch, len, channels, padded;
};

template <typename T>
ConvGeometry geometry(const Tensor<T>& u, std::size_t kernel_len) {
  if (u.rank() != 2 && u.rank() != 3) throw SizeError("ssm_conv: input must be L x d or B x L x d");
  ConvGeometry g;
  g.batch = u.rank() == 3 ? u.dim(0) : 1;
  g.len = u.dim(u.rank() - 2);
  g.channels = u.cols();
  if (kernel_len != g.len) {
    throw SizeError("ssm_conv: kernel length " + std::to_string(kernel_len) + " != sequence length " +
                    std::to_string(g.len));
  }
  g.padded = next_power_of_two(2 * g.len);
  return g;
}

TrackedVector<cplx> kernel_spectrum(const DiscreteKernel& kernel, std::size_t padded) {
  TrackedVector<cplx> kf(padded, cplx(0.0, 0.0));
  for (std::size_t l = 0; l < kernel.length(); ++l) kf[l] = kernel.values[l];
  fft_inplace(kf, false);
  return kf;
}

}  // namespace

template <typename T>
Tensor<T> ssm_conv(const DiscreteKernel& kernel, const Tensor<T>& u) {
  const ConvGeometry g = geometry(u, kernel.length());
  const auto kf = kernel_spectrum(kernel, g.padded);
  Tensor<T> y(u.shape());
  TrackedVector<cplx> buf(g.padded);
  const std::size_t stride = g.len * g.channels;
  for (std::size_t b = 0; b < g.batch; ++b) {
    const T* in = u.data() + b * stride;
    T* out = y.data() + b * stride;
    for (std::size_t c = 0; c < g.channels; c += 2) {
      load_pair(in, g.len, g.channels, c, buf);
      fft_inplace(buf, false);
      for (std::size_t k = 0; k < g.padded; ++k) buf[k] *= kf[k];
      fft_inplace(buf, true);
      store_pair<T>(buf, g.len, g.channels, c, out);
    }
  }
  return y;
}

template <typename T>
Tensor<T> ssm_conv_backward(const DiscreteKernel& kernel, const Tensor<T>& u, const Tensor<T>& dy,
                            std::vector<double>& dkernel) {
  require_same_shape(u.shape(), dy.shape(), "ssm_conv_backward");
  const ConvGeometry g = geometry(u, kernel.length());
  if (dkernel.size() != g.len) dkernel.assign(g.len, 0.0);
  const auto kf = kernel_spectrum(kernel, g.padded);
  Tensor<T> du(u.shape());
  TrackedVector<cplx> gbuf(g.padded), ubuf(g.padded), cross(g.padded, cplx(0.0, 0.0));
  const std::size_t stride = g.len * g.channels;
  for (std::size_t b = 0; b < g.batch; ++b) {
    const T* in = u.data() + b * stride;
    const T* grad = dy.data() + b * stride;
    T* out = du.data() + b * stride;
    for (std::size_t c = 0; c < g.channels; c += 2) {
      load_pair(grad, g.len, g.channels, c, gbuf);
      fft_inplace(gbuf, false);
      load_pair(in, g.len, g.channels, c, ubuf);
      fft_inplace(ubuf, false);
      // Real part of IFFT(G conj(U)) is the sum of both channels'
      // cross-correlations; the imaginary part holds only cross terms.
      for (std::size_t k = 0; k < g.padded; ++k) {
        cross[k] += gbuf[k] * std::conj(ubuf[k]);
        gbuf[k] *= std::conj(kf[k]);
      }
      fft_inplace(gbuf, true);
      store_pair<T>(gbuf, g.len, g.channels, c, out);
    }
  }
  fft_inplace(cross, true);
  for (std::size_t l = 0; l < g.len; ++l) dkernel[l] += cross[l].real();
  return du;
}

template <typename T>
Tensor<T> ssm_recurrence(const KernelSpec<T>& spec, const Tensor<T>& u, const KernelOptions& opts) {
  if (u.rank() != 2 && u.rank() != 3) throw SizeError("ssm_recurrence: input must be L x d or B x L x d");
  const Discretized disc = discretize(spec, opts.discretization);
  const std::size_t n_modes = spec.state_size();
  const std::size_t batch = u.rank() == 3 ? u.dim(0) : 1;
  const std::size_t len = u.dim(u.rank() - 2);
  const std::size_t d = u.cols();
  const double f = opts.output_factor();
  Tensor<T> y(u.shape());
  std::vector<cplx> state(n_modes);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t c = 0; c < d; ++c) {
      std::fill(state.begin(), state.end(), cplx(0.0, 0.0));
      for (std::size_t t = 0; t < len; ++t) {
        const double uk = static_cast<double>(u[(b * len + t) * d + c]);
        double acc = 0.0;
        for (std::size_t n = 0; n < n_modes; ++n) {
          state[n] = disc.a_bar[n] * state[n] + disc.b_bar[n] * uk;
          acc += (spec.c(n) * state[n]).real();
        }
        y[(b * len + t) * d + c] = static_cast<T>(f * acc);
      }
    }
  }
  return y;
}

template <typename T>
void kernel_backward(const KernelSpec<T>& spec, std::span<const double> dkernel, const KernelOptions& opts,
                     KernelSpec<T>& grad) {
  const double f = opts.output_factor();
  const double delta = spec.delta();
  double g_delta = 0.0;
  for (std::size_t n = 0; n < spec.state_size(); ++n) {
    const cplx lam = spec.lambda(n);
    const ModeTerms t = mode_terms(lam, delta, opts.discretization);
    const cplx b = spec.b(n), c = spec.c(n);
    const cplx w = c * t.q * b;

    // sum_l dK[l] z^l and sum_l dK[l] l z^(l-1)
    cplx power(1.0, 0.0), prev(0.0, 0.0), g_sum(0.0, 0.0), h_sum(0.0, 0.0);
    for (std::size_t l = 0; l < dkernel.size(); ++l) {
      g_sum += dkernel[l] * power;
      if (l > 0) h_sum += dkernel[l] * static_cast<double>(l) * prev;
      prev = power;
      power *= t.z;
    }

    // Cotangents g = dL/dRe + i dL/dIm; a holomorphic step x -> y
    // maps them as g_x = conj(dy/dx) g_y.
    const cplx g_w = f * std::conj(g_sum);
    const cplx g_z = f * std::conj(w * h_sum);
    const cplx g_c = std::conj(t.q * b) * g_w;
    const cplx g_b = std::conj(c * t.q) * g_w;
    const cplx g_q = std::conj(c * b) * g_w;
    const cplx g_lam = std::conj(t.dz_dlam) * g_z + std::conj(t.dq_dlam) * g_q;
    g_delta += (std::conj(g_z) * t.dz_ddelta + std::conj(g_q) * t.dq_ddelta).real();

    grad.c_re[n] += static_cast<T>(g_c.real());
    grad.c_im[n] += static_cast<T>(g_c.imag());
    grad.b_re[n] += static_cast<T>(g_b.real());
    grad.b_im[n] += static_cast<T>(g_b.imag());
    grad.lambda_log_neg_re[n] += static_cast<T>(lam.real() * g_lam.real());
    grad.lambda_im[n] += static_cast<T>(g_lam.imag());
  }
  grad.log_delta[0] += static_cast<T>(delta * g_delta);
}

#define CODESSM_INSTANTIATE(T)                                                                                \
  template struct KernelSpec<T>;                                                                              \
  template KernelSpec<T> init_s4d_lin<T>(std::size_t, Rng&, double, double);                                  \
  template Discretized discretize<T>(const KernelSpec<T>&, Discretization);                                   \
  template DiscreteKernel materialize_kernel<T>(const KernelSpec<T>&, std::size_t, const KernelOptions&);     \
  template Tensor<T> ssm_conv<T>(const DiscreteKernel&, const Tensor<T>&);                                    \
  template Tensor<T> ssm_conv_backward<T>(const DiscreteKernel&, const Tensor<T>&, const Tensor<T>&,          \
                                          std::vector<double>&);                                              \
  template Tensor<T> ssm_recurrence<T>(const KernelSpec<T>&, const Tensor<T>&, const KernelOptions&);         \
  template void kernel_backward<T>(const KernelSpec<T>&, std::span<const double>, const KernelOptions&,       \
                                   KernelSpec<T>&);

CODESSM_INSTANTIATE(float)
CODESSM_INSTANTIATE(double)
#undef CODESSM_INSTANTIATE

template KernelSpec<double> KernelSpec<float>::cast<double>() const;
template KernelSpec<float> KernelSpec<double>::cast<float>() const;
template KernelSpec<float> KernelSpec<float>::cast<float>() const;
template KernelSpec<double> KernelSpec<double>::cast<double>() const;

}  // namespace codessm::ssm
