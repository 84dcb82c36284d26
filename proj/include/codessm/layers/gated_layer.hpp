#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "codessm/layers/params.hpp"
#include "codessm/numerics/ops.hpp"
#include "codessm/numerics/rng.hpp"
#include "codessm/ssm/kernel.hpp"

namespace codessm::layers {

/// Per-sample valid lengths; valid positions always form a prefix.
class PadMask {
 public:
  PadMask() = default;
  PadMask(std::size_t seq_len, std::vector<std::size_t> valid_lengths);
  static PadMask full(std::size_t batch, std::size_t seq_len);
  /// Builds a mask from per-position flags; throws SizeError unless each
  /// row is a run of true followed by a run of false.
  static PadMask from_flags(const std::vector<std::vector<bool>>& flags);

  std::size_t batch() const noexcept { return lengths_.size(); }
  std::size_t seq_len() const noexcept { return seq_len_; }
  std::size_t valid_length(std::size_t b) const { return lengths_.at(b); }
  bool valid(std::size_t b, std::size_t t) const { return t < lengths_.at(b); }
  bool all_valid() const noexcept;

 private:
  std::size_t seq_len_ = 0;
  std::vector<std::size_t> lengths_;
};

/// Reverses each sample's valid prefix along time; padded rows are left in
/// place. x is B x L x d (or L x d with a single-sample mask).
template <typename T>
Tensor<T> flip(const Tensor<T>& x, const PadMask& mask);

/// Sets the rows of padded positions to zero.
template <typename T>
void zero_padding(Tensor<T>& x, const PadMask& mask);

enum class LayerVariant {
  Base,     // bidirectional gated SSM
  Uni,      // both flips removed
  Dft,      // sequence mixing by the real part of an orthonormal DFT
  Dropout,  // base plus dropout after each elementwise product
};

struct LayerOptions {
  LayerVariant variant = LayerVariant::Base;
  double dropout = 0.1;  // used by LayerVariant::Dropout only
  ssm::KernelOptions kernel{};
  /// Adds biases to W_u1, W_u2, W_u and W_o (off: gate projections are bias-free).
  bool gate_bias = false;

  bool bidirectional() const noexcept { return variant != LayerVariant::Uni; }
  double active_dropout(bool training) const noexcept {
    return training && variant == LayerVariant::Dropout ? dropout : 0.0;
  }
};

/// Weights of one three-stage gated layer with hidden size d.
template <typename T>
struct GatedLayerParams {
  using value_type = T;

  Tensor<T> ln_gamma, ln_beta;  // d
  Tensor<T> wv, bv;             // 3d x d, 3d
  Tensor<T> wf, bf;             // d x d, d
  Tensor<T> wb, bb;             // d x d, d
  Tensor<T> wu1, bu1;           // d x d (bias optional)
  Tensor<T> wu2, bu2;           // d x d (bias optional)
  Tensor<T> wu, bu;             // 3d x d (bias optional)
  Tensor<T> wo, bo;             // d x 3d (bias optional)
  ssm::KernelSpec<T> fwd_kernel;
  ssm::KernelSpec<T> bwd_kernel;

  GatedLayerParams() = default;
  /// Zero-initialized parameters of the right shapes.
  GatedLayerParams(std::size_t d, std::size_t state_size, bool gate_bias);

  std::size_t hidden() const noexcept { return ln_gamma.size(); }

  template <typename Self, typename F>
  static void visit(Self& self, const std::string& prefix, F&& fn);
};

template <typename T>
GatedLayerParams<T> init_gated_layer(std::size_t d, std::size_t state_size, bool gate_bias, Rng& rng,
                                     double weight_std = 0.02);

/// Everything the backward pass needs from one forward pass.
template <typename T>
struct GatedLayerCache {
  PadMask mask;
  LayerNormCache<T> ln;
  Tensor<T> x, x_flipped;
  Tensor<T> pre_v, pre_f, pre_b;
  Tensor<T> v, f, b;
  Tensor<T> mixed_f, mixed_b;
  Tensor<T> u1, u2_flipped;
  Tensor<T> p;  // U1 * Flip(U2) after dropout
  Tensor<T> pre_u, u;
  Tensor<T> q;  // U * V after dropout
  Tensor<T> drop_p, drop_q;  // scaled keep masks; empty when dropout is off
  std::optional<ssm::DiscreteKernel> kernel_f, kernel_b;
};

/// X_{i+1} = W_o(U * V) + X_i with the gated bidirectional SSM in between.
/// x_in is B x L x d with padded rows already zero; padded rows of the
/// output are zero too. rng is consumed only when dropout is active.
template <typename T>
Tensor<T> layer_forward(const GatedLayerParams<T>& params, const LayerOptions& opts, const Tensor<T>& x_in,
                        const PadMask& mask, bool training, Rng& rng, GatedLayerCache<T>* cache = nullptr);

/// Returns dL/dx_in and accumulates parameter gradients into grads.
template <typename T>
Tensor<T> layer_backward(const GatedLayerParams<T>& params, const LayerOptions& opts, const GatedLayerCache<T>& cache,
                         const Tensor<T>& d_out, GatedLayerParams<T>& grads);

// ---------------------------------------------------------------------------

template <typename Spec, typename F>
void visit_kernel(Spec& k, const std::string& prefix, F&& fn) {
  fn(prefix + "lambda_log_neg_re", k.lambda_log_neg_re, DecayGroup::NoDecaySsm);
  fn(prefix + "lambda_im", k.lambda_im, DecayGroup::NoDecaySsm);
  fn(prefix + "b_re", k.b_re, DecayGroup::NoDecaySsm);
  fn(prefix + "b_im", k.b_im, DecayGroup::NoDecaySsm);
  fn(prefix + "c_re", k.c_re, DecayGroup::NoDecaySsm);
  fn(prefix + "c_im", k.c_im, DecayGroup::NoDecaySsm);
  fn(prefix + "log_delta", k.log_delta, DecayGroup::NoDecaySsm);
}

template <typename T>
template <typename Self, typename F>
void GatedLayerParams<T>::visit(Self& self, const std::string& prefix, F&& fn) {
  fn(prefix + "ln.gamma", self.ln_gamma, DecayGroup::NoDecayBiasNorm);
  fn(prefix + "ln.beta", self.ln_beta, DecayGroup::NoDecayBiasNorm);
  fn(prefix + "w_v.weight", self.wv, DecayGroup::Decay);
  fn(prefix + "w_v.bias", self.bv, DecayGroup::NoDecayBiasNorm);
  fn(prefix + "w_f.weight", self.wf, DecayGroup::Decay);
  fn(prefix + "w_f.bias", self.bf, DecayGroup::NoDecayBiasNorm);
  fn(prefix + "w_b.weight", self.wb, DecayGroup::Decay);
  fn(prefix + "w_b.bias", self.bb, DecayGroup::NoDecayBiasNorm);
  fn(prefix + "w_u1.weight", self.wu1, DecayGroup::Decay);
  fn(prefix + "w_u1.bias", self.bu1, DecayGroup::NoDecayBiasNorm);
  fn(prefix + "w_u2.weight", self.wu2, DecayGroup::Decay);
  fn(prefix + "w_u2.bias", self.bu2, DecayGroup::NoDecayBiasNorm);
  fn(prefix + "w_u.weight", self.wu, DecayGroup::Decay);
  fn(prefix + "w_u.bias", self.bu, DecayGroup::NoDecayBiasNorm);
  fn(prefix + "w_o.weight", self.wo, DecayGroup::Decay);
  fn(prefix + "w_o.bias", self.bo, DecayGroup::NoDecayBiasNorm);
  visit_kernel(self.fwd_kernel, prefix + "ssm_fwd.", fn);
  visit_kernel(self.bwd_kernel, prefix + "ssm_bwd.", fn);
}

}  // namespace codessm::layers
