#pragma once

#include <cstddef>
#include <vector>

#include "codessm/numerics/fft.hpp"
#include "codessm/numerics/rng.hpp"
#include "codessm/numerics/tensor.hpp"

namespace codessm::ssm {

enum class Discretization { ZeroOrderHold, Bilinear };

/// How the N stored modes map to a real output.
/// ConjugatePair: each mode stands for a conjugate pair, output = 2 Re(.).
/// RealOnly: output = Re(.), used by closed-form unit tests.
enum class ModeConvention { ConjugatePair, RealOnly };

struct KernelOptions {
  Discretization discretization = Discretization::ZeroOrderHold;
  ModeConvention convention = ModeConvention::ConjugatePair;

  double output_factor() const noexcept { return convention == ModeConvention::ConjugatePair ? 2.0 : 1.0; }
};

/// Learnable parameters of one diagonal SSM.
///
/// Lambda_n = -exp(lambda_log_neg_re[n]) + i lambda_im[n], so Re(Lambda) < 0
/// for any value of the stored parameter. The step size is exp(log_delta).
/// D is fixed at zero and the output map is C itself.
template <typename T>
struct KernelSpec {
  Tensor<T> lambda_log_neg_re;
  Tensor<T> lambda_im;
  Tensor<T> b_re;
  Tensor<T> b_im;
  Tensor<T> c_re;
  Tensor<T> c_im;
  Tensor<T> log_delta;  // shape [1]

  KernelSpec() = default;
  /// All-zero parameters for N modes (Lambda_n = -1, Delta = 1).
  explicit KernelSpec(std::size_t state_size);

  std::size_t state_size() const noexcept { return lambda_im.size(); }

  cplx lambda(std::size_t n) const;
  cplx b(std::size_t n) const { return {static_cast<double>(b_re[n]), static_cast<double>(b_im[n])}; }
  cplx c(std::size_t n) const { return {static_cast<double>(c_re[n]), static_cast<double>(c_im[n])}; }
  double delta() const;

  /// Builds a spec from a complex Lambda (Re < 0 required), B, C and Delta.
  static KernelSpec from_complex(const std::vector<cplx>& lambda, const std::vector<cplx>& b,
                                 const std::vector<cplx>& c, double delta);

  template <typename U>
  KernelSpec<U> cast() const;
};

/// S4D-Lin initialization: Lambda_n = -1/2 + i pi n, B = 1, C unit complex
/// Gaussian, Delta log-uniform in [dt_min, dt_max].
template <typename T>
KernelSpec<T> init_s4d_lin(std::size_t state_size, Rng& rng, double dt_min = 1e-3, double dt_max = 1e-1);

struct Discretized {
  ComplexVector a_bar;
  ComplexVector b_bar;
};

/// A_bar = exp(Delta Lambda), B_bar = (A_bar - 1) / Lambda * B under
/// zero-order hold; the bilinear rule is available for experiments.
/// Throws NumericError if some Lambda_n is exactly zero.
template <typename T>
Discretized discretize(const KernelSpec<T>& spec, Discretization rule = Discretization::ZeroOrderHold);

/// Materialized convolution kernel K[l] = f Re(sum_n C_n B_bar_n A_bar_n^l).
struct DiscreteKernel {
  std::vector<double> values;
  std::size_t state_size = 0;

  std::size_t length() const noexcept { return values.size(); }
};

template <typename T>
DiscreteKernel materialize_kernel(const KernelSpec<T>& spec, std::size_t length, const KernelOptions& opts = {});

/// Causal convolution of every channel with one shared kernel, via FFT with
/// zero padding to the next power of two >= 2L. u is L x d or B x L x d.
template <typename T>
Tensor<T> ssm_conv(const DiscreteKernel& kernel, const Tensor<T>& u);

/// Gradients of ssm_conv. Returns du and accumulates dL/dK into dkernel.
template <typename T>
Tensor<T> ssm_conv_backward(const DiscreteKernel& kernel, const Tensor<T>& u, const Tensor<T>& dy,
                            std::vector<double>& dkernel);

/// Step-by-step state recursion x_k = A_bar x_{k-1} + B_bar u_k with zero
/// initial state; same output convention as materialize_kernel.
template <typename T>
Tensor<T> ssm_recurrence(const KernelSpec<T>& spec, const Tensor<T>& u, const KernelOptions& opts = {});

/// Chains dL/dK back to every field of the spec; accumulates into grad.
template <typename T>
void kernel_backward(const KernelSpec<T>& spec, std::span<const double> dkernel, const KernelOptions& opts,
                     KernelSpec<T>& grad);

}  // namespace codessm::ssm
