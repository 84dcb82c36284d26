#include "codessm/bench/attention.hpp"

#include <cmath>

#include "codessm/numerics/ops.hpp"

namespace codessm::bench {

template <typename T>
AttentionParams<T> init_attention(std::size_t d, std::size_t n_heads, Rng& rng, double std) {
  if (n_heads == 0 || d % n_heads != 0) {
    throw SizeError("hidden size " + std::to_string(d) + " is not divisible by " + std::to_string(n_heads) + " heads");
  }
  AttentionParams<T> p;
  p.n_heads = n_heads;
  for (auto* w : {&p.wq, &p.wk, &p.wv, &p.wo}) {
    *w = Tensor<T>({d, d});
    for (auto& v : w->values()) v = static_cast<T>(rng.truncated_normal(std));
  }
  for (auto* b : {&p.bq, &p.bk, &p.bv, &p.bo}) *b = Tensor<T>({d});
  return p;
}

template <typename T>
Tensor<T> attention_reference_forward(const AttentionParams<T>& params, const Tensor<T>& x) {
  return attention_reference_forward(params, x, static_cast<Tensor<T>*>(nullptr));
}

template <typename T>
Tensor<T> attention_reference_forward(const AttentionParams<T>& p, const Tensor<T>& x, Tensor<T>* probs_out) {
  const std::size_t d = p.hidden();
  if (x.cols() != d) throw SizeError("attention input width " + std::to_string(x.cols()) + " != " + std::to_string(d));
  if (d % p.n_heads != 0) throw SizeError("hidden size not divisible by head count");
  const std::size_t batch = x.rank() == 3 ? x.dim(0) : 1;
  const std::size_t len = x.rows() / batch;
  const std::size_t heads = p.n_heads, dh = d / heads;

  const Tensor<T> q = linear(x, p.wq, &p.bq);
  const Tensor<T> k = linear(x, p.wk, &p.bk);
  const Tensor<T> v = linear(x, p.wv, &p.bv);

  // Head-major copies: B x H x L x dh.
  auto split = [&](const Tensor<T>& t) {
    Tensor<T> out({batch, heads, len, dh});
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t h = 0; h < heads; ++h)
        for (std::size_t i = 0; i < len; ++i)
          for (std::size_t c = 0; c < dh; ++c) out[((b * heads + h) * len + i) * dh + c] = t[(b * len + i) * d + h * dh + c];
    return out;
  };
  const Tensor<T> qh = split(q), kh = split(k), vh = split(v);

  Tensor<T> scores({batch, heads, len, len});
  Tensor<T> probs({batch, heads, len, len});
  Tensor<T> ctx_h({batch, heads, len, dh});
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
  for (std::size_t bh = 0; bh < batch * heads; ++bh) {
    T* s = scores.data() + bh * len * len;
    gemm_nt(qh.data() + bh * len * dh, kh.data() + bh * len * dh, s, len, len, dh, false);
    T* pr = probs.data() + bh * len * len;
    for (std::size_t i = 0; i < len; ++i) {
      const T* row = s + i * len;
      T* out = pr + i * len;
      T mx = row[0] * scale;
      for (std::size_t j = 1; j < len; ++j) mx = std::max(mx, row[j] * scale);
      T z = 0;
      for (std::size_t j = 0; j < len; ++j) z += out[j] = std::exp(row[j] * scale - mx);
      for (std::size_t j = 0; j < len; ++j) out[j] /= z;
    }
    gemm_nn(pr, vh.data() + bh * len * dh, ctx_h.data() + bh * len * dh, len, dh, len, false);
  }

  Tensor<T> ctx(x.shape());
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t h = 0; h < heads; ++h)
      for (std::size_t i = 0; i < len; ++i)
        for (std::size_t c = 0; c < dh; ++c) ctx[(b * len + i) * d + h * dh + c] = ctx_h[((b * heads + h) * len + i) * dh + c];
  if (probs_out) *probs_out = probs;
  return linear(ctx, p.wo, &p.bo);
}

template AttentionParams<float> init_attention<float>(std::size_t, std::size_t, Rng&, double);
template AttentionParams<double> init_attention<double>(std::size_t, std::size_t, Rng&, double);
template Tensor<float> attention_reference_forward<float>(const AttentionParams<float>&, const Tensor<float>&);
template Tensor<double> attention_reference_forward<double>(const AttentionParams<double>&, const Tensor<double>&);
template Tensor<float> attention_reference_forward<float>(const AttentionParams<float>&, const Tensor<float>&,
                                                          Tensor<float>*);
template Tensor<double> attention_reference_forward<double>(const AttentionParams<double>&, const Tensor<double>&,
                                                            Tensor<double>*);

}  // namespace codessm::bench
