#include "codessm/layers/gated_layer.hpp"

#include <cmath>
#include <map>
#include <numbers>

namespace codessm::layers {

PadMask::PadMask(std::size_t seq_len, std::vector<std::size_t> valid_lengths)
    : seq_len_(seq_len), lengths_(std::move(valid_lengths)) {
  for (auto n : lengths_) {
    if (n > seq_len_) throw SizeError("PadMask: valid length exceeds sequence length");
  }
}

PadMask PadMask::full(std::size_t batch, std::size_t seq_len) {
  return PadMask(seq_len, std::vector<std::size_t>(batch, seq_len));
}

PadMask PadMask::from_flags(const std::vector<std::vector<bool>>& flags) {
  std::vector<std::size_t> lengths;
  std::size_t seq_len = flags.empty() ? 0 : flags.front().size();
  for (const auto& row : flags) {
    if (row.size() != seq_len) throw SizeError("PadMask: ragged flag rows");
    std::size_t n = 0;
    while (n < row.size() && row[n]) ++n;
    for (std::size_t t = n; t < row.size(); ++t) {
      if (row[t]) throw SizeError("PadMask: valid positions must form a prefix");
    }
    lengths.push_back(n);
  }
  return PadMask(seq_len, std::move(lengths));
}

bool PadMask::all_valid() const noexcept {
  for (auto n : lengths_)
    if (n != seq_len_) return false;
  return true;
}

namespace {

void check_mask(const Shape& shape, const PadMask& mask, const char* what) {
  const std::size_t batch = shape.size() == 3 ? shape[0] : 1;
  const std::size_t len = shape.size() >= 2 ? shape[shape.size() - 2] : 0;
  if (shape.size() < 2 || shape.size() > 3 || mask.batch() != batch || mask.seq_len() != len) {
    throw SizeError(std::string(what) + ": input " + shape_string(shape) + " does not match mask (" +
                    std::to_string(mask.batch()) + " x " + std::to_string(mask.seq_len()) + ")");
  }
}

}  // namespace

template <typename T>
Tensor<T> flip(const Tensor<T>& x, const PadMask& mask) {
  check_mask(x.shape(), mask, "flip");
  const std::size_t len = mask.seq_len(), d = x.cols();
  Tensor<T> y = x;
  for (std::size_t b = 0; b < mask.batch(); ++b) {
    const std::size_t n = mask.valid_length(b);
    const T* src = x.data() + b * len * d;
    T* dst = y.data() + b * len * d;
    for (std::size_t t = 0; t < n; ++t) std::copy_n(src + (n - 1 - t) * d, d, dst + t * d);
  }
  return y;
}

template <typename T>
void zero_padding(Tensor<T>& x, const PadMask& mask) {
  const std::size_t len = mask.seq_len(), d = x.cols();
  for (std::size_t b = 0; b < mask.batch(); ++b) {
    for (std::size_t t = mask.valid_length(b); t < len; ++t) std::fill_n(x.data() + (b * len + t) * d, d, T(0));
  }
}

template <typename T>
GatedLayerParams<T>::GatedLayerParams(std::size_t d, std::size_t state_size, bool gate_bias)
    : ln_gamma({d}, T(1)),
      ln_beta({d}),
      wv({3 * d, d}),
      bv({3 * d}),
      wf({d, d}),
      bf({d}),
      wb({d, d}),
      bb({d}),
      wu1({d, d}),
      wu2({d, d}),
      wu({3 * d, d}),
      wo({d, 3 * d}),
      fwd_kernel(state_size),
      bwd_kernel(state_size) {
  if (gate_bias) {
    bu1 = Tensor<T>({d});
    bu2 = Tensor<T>({d});
    bu = Tensor<T>({3 * d});
    bo = Tensor<T>({d});
  }
}

template <typename T>
GatedLayerParams<T> init_gated_layer(std::size_t d, std::size_t state_size, bool gate_bias, Rng& rng,
                                     double weight_std) {
  GatedLayerParams<T> p(d, state_size, gate_bias);
  for (auto* w : {&p.wv, &p.wf, &p.wb, &p.wu1, &p.wu2, &p.wu, &p.wo}) {
    for (auto& v : w->values()) v = static_cast<T>(rng.truncated_normal(weight_std));
  }
  p.fwd_kernel = ssm::init_s4d_lin<T>(state_size, rng);
  p.bwd_kernel = ssm::init_s4d_lin<T>(state_size, rng);
  return p;
}

namespace {

// Orthonormal cosine matrix cos(2 pi k t / n) / sqrt(n), cached per n.
template <typename T>
const std::vector<T>& cosine_matrix(std::size_t n) {
  thread_local std::map<std::size_t, std::vector<T>> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<T> m(n * n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t t = 0; t < n; ++t) {
      const double a = 2.0 * std::numbers::pi * static_cast<double>((k * t) % n) / static_cast<double>(n);
      m[k * n + t] = static_cast<T>(std::cos(a) * scale);
    }
  return cache.emplace(n, std::move(m)).first->second;
}

// Re(DFT) over each sample's valid prefix. The matrix is symmetric, so the
// same routine is its own adjoint.
template <typename T>
Tensor<T> dft_mix(const Tensor<T>& x, const PadMask& mask) {
  const std::size_t len = mask.seq_len(), d = x.cols();
  Tensor<T> y(x.shape());
  for (std::size_t b = 0; b < mask.batch(); ++b) {
    const std::size_t n = mask.valid_length(b);
    if (n == 0) continue;
    gemm_nn(cosine_matrix<T>(n).data(), x.data() + b * len * d, y.data() + b * len * d, n, d, n, false);
  }
  return y;
}

template <typename T>
Tensor<T> dropout_mask(const Shape& shape, double p, Rng& rng) {
  Tensor<T> m(shape);
  const T keep = static_cast<T>(1.0 / (1.0 - p));
  for (auto& v : m.values()) v = rng.uniform() < p ? T(0) : keep;
  return m;
}

template <typename T>
void scale_by_gelu_derivative(Tensor<T>& grad, const Tensor<T>& pre) {
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] *= gelu_derivative(pre[i]);
}

template <typename T>
const Tensor<T>* maybe(const Tensor<T>& t) {
  return t.empty() ? nullptr : &t;
}
template <typename T>
Tensor<T>* maybe(Tensor<T>& t) {
  return t.empty() ? nullptr : &t;
}

}  // namespace

template <typename T>
Tensor<T> layer_forward(const GatedLayerParams<T>& params, const LayerOptions& opts, const Tensor<T>& x_in,
                        const PadMask& mask, bool training, Rng& rng, GatedLayerCache<T>* cache) {
  const std::size_t d = params.hidden();
  if (x_in.cols() != d) {
    throw SizeError("layer_forward: hidden size " + std::to_string(x_in.cols()) + " != " + std::to_string(d));
  }
  check_mask(x_in.shape(), mask, "layer_forward");
  const bool bidir = opts.bidirectional();
  const double p_drop = opts.active_dropout(training);
  const std::size_t len = mask.seq_len();

  LayerNormCache<T> ln_cache;
  Tensor<T> x = layer_norm(x_in, params.ln_gamma, params.ln_beta, kLayerNormEps, cache ? &ln_cache : nullptr);
  Tensor<T> x_flipped = bidir ? flip(x, mask) : Tensor<T>();
  const Tensor<T>& x_b = bidir ? x_flipped : x;

  Tensor<T> pre_v = linear(x, params.wv, &params.bv);
  Tensor<T> pre_f = linear(x, params.wf, &params.bf);
  Tensor<T> pre_b = linear(x_b, params.wb, &params.bb);
  Tensor<T> v = gelu(pre_v);
  Tensor<T> f = gelu(pre_f);
  Tensor<T> b = gelu(pre_b);
  zero_padding(f, mask);
  zero_padding(b, mask);

  std::optional<ssm::DiscreteKernel> kernel_f, kernel_b;
  Tensor<T> mixed_f, mixed_b;
  if (opts.variant == LayerVariant::Dft) {
    mixed_f = dft_mix(f, mask);
    mixed_b = dft_mix(b, mask);
  } else {
    kernel_f = ssm::materialize_kernel(params.fwd_kernel, len, opts.kernel);
    kernel_b = ssm::materialize_kernel(params.bwd_kernel, len, opts.kernel);
    mixed_f = ssm::ssm_conv(*kernel_f, f);
    mixed_b = ssm::ssm_conv(*kernel_b, b);
  }

  Tensor<T> u1 = linear(mixed_f, params.wu1, maybe(params.bu1));
  Tensor<T> u2 = linear(mixed_b, params.wu2, maybe(params.bu2));
  Tensor<T> u2_flipped = bidir ? flip(u2, mask) : std::move(u2);

  Tensor<T> p = hadamard(u1, u2_flipped);
  Tensor<T> drop_p, drop_q;
  if (p_drop > 0) {
    drop_p = dropout_mask<T>(p.shape(), p_drop, rng);
    p = hadamard(p, drop_p);
  }
  Tensor<T> pre_u = linear(p, params.wu, maybe(params.bu));
  Tensor<T> u = gelu(pre_u);
  Tensor<T> q = hadamard(u, v);
  if (p_drop > 0) {
    drop_q = dropout_mask<T>(q.shape(), p_drop, rng);
    q = hadamard(q, drop_q);
  }
  Tensor<T> out = linear(q, params.wo, maybe(params.bo));
  zero_padding(out, mask);
  add_inplace(out, x_in);

  if (cache) {
    cache->mask = mask;
    cache->ln = std::move(ln_cache);
    cache->x = std::move(x);
    cache->x_flipped = std::move(x_flipped);
    cache->pre_v = std::move(pre_v);
    cache->pre_f = std::move(pre_f);
    cache->pre_b = std::move(pre_b);
    cache->v = std::move(v);
    cache->f = std::move(f);
    cache->b = std::move(b);
    cache->mixed_f = std::move(mixed_f);
    cache->mixed_b = std::move(mixed_b);
    cache->u1 = std::move(u1);
    cache->u2_flipped = std::move(u2_flipped);
    cache->p = std::move(p);
    cache->pre_u = std::move(pre_u);
    cache->u = std::move(u);
    cache->q = std::move(q);
    cache->drop_p = std::move(drop_p);
    cache->drop_q = std::move(drop_q);
    cache->kernel_f = std::move(kernel_f);
    cache->kernel_b = std::move(kernel_b);
  }
  return out;
}

template <typename T>
Tensor<T> layer_backward(const GatedLayerParams<T>& params, const LayerOptions& opts, const GatedLayerCache<T>& c,
                         const Tensor<T>& d_out, GatedLayerParams<T>& g) {
  const bool bidir = opts.bidirectional();
  const PadMask& mask = c.mask;

  Tensor<T> d_o = d_out;
  zero_padding(d_o, mask);
  Tensor<T> d_q = linear_backward(d_o, c.q, params.wo, g.wo, maybe(g.bo));
  if (!c.drop_q.empty()) d_q = hadamard(d_q, c.drop_q);
  Tensor<T> d_u = hadamard(d_q, c.v);
  Tensor<T> d_v = hadamard(d_q, c.u);

  scale_by_gelu_derivative(d_u, c.pre_u);
  Tensor<T> d_p = linear_backward(d_u, c.p, params.wu, g.wu, maybe(g.bu));
  if (!c.drop_p.empty()) d_p = hadamard(d_p, c.drop_p);
  Tensor<T> d_u1 = hadamard(d_p, c.u2_flipped);
  Tensor<T> d_u2 = hadamard(d_p, c.u1);
  if (bidir) d_u2 = flip(d_u2, mask);

  Tensor<T> d_mf = linear_backward(d_u1, c.mixed_f, params.wu1, g.wu1, maybe(g.bu1));
  Tensor<T> d_mb = linear_backward(d_u2, c.mixed_b, params.wu2, g.wu2, maybe(g.bu2));

  Tensor<T> d_f, d_b;
  if (opts.variant == LayerVariant::Dft) {
    d_f = dft_mix(d_mf, mask);
    d_b = dft_mix(d_mb, mask);
  } else {
    std::vector<double> dk_f, dk_b;
    d_f = ssm::ssm_conv_backward(*c.kernel_f, c.f, d_mf, dk_f);
    d_b = ssm::ssm_conv_backward(*c.kernel_b, c.b, d_mb, dk_b);
    ssm::kernel_backward(params.fwd_kernel, dk_f, opts.kernel, g.fwd_kernel);
    ssm::kernel_backward(params.bwd_kernel, dk_b, opts.kernel, g.bwd_kernel);
  }
  zero_padding(d_f, mask);
  zero_padding(d_b, mask);

  scale_by_gelu_derivative(d_f, c.pre_f);
  scale_by_gelu_derivative(d_b, c.pre_b);
  scale_by_gelu_derivative(d_v, c.pre_v);

  Tensor<T> d_x = linear_backward(d_f, c.x, params.wf, g.wf, &g.bf);
  add_inplace(d_x, linear_backward(d_v, c.x, params.wv, g.wv, &g.bv));
  if (bidir) {
    add_inplace(d_x, flip(linear_backward(d_b, c.x_flipped, params.wb, g.wb, &g.bb), mask));
  } else {
    add_inplace(d_x, linear_backward(d_b, c.x, params.wb, g.wb, &g.bb));
  }

  Tensor<T> d_in = layer_norm_backward(d_x, params.ln_gamma, c.ln, g.ln_gamma, g.ln_beta);
  add_inplace(d_in, d_out);
  return d_in;
}

#define CODESSM_INSTANTIATE(T)                                                                                   \
  template Tensor<T> flip<T>(const Tensor<T>&, const PadMask&);                                                  \
  template void zero_padding<T>(Tensor<T>&, const PadMask&);                                                     \
  template struct GatedLayerParams<T>;                                                                           \
  template GatedLayerParams<T> init_gated_layer<T>(std::size_t, std::size_t, bool, Rng&, double);               \
  template Tensor<T> layer_forward<T>(const GatedLayerParams<T>&, const LayerOptions&, const Tensor<T>&,         \
                                      const PadMask&, bool, Rng&, GatedLayerCache<T>*);                          \
  template Tensor<T> layer_backward<T>(const GatedLayerParams<T>&, const LayerOptions&,                          \
                                       const GatedLayerCache<T>&, const Tensor<T>&, GatedLayerParams<T>&);

CODESSM_INSTANTIATE(float)
CODESSM_INSTANTIATE(double)
#undef CODESSM_INSTANTIATE

}  // namespace codessm::layers
