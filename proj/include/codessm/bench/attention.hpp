#pragma once

#include <cstddef>

#include "codessm/numerics/rng.hpp"
#include "codessm/numerics/tensor.hpp"

namespace codessm::bench {

/// Multi-head softmax self-attention used only as a benchmark baseline.
template <typename T>
struct AttentionParams {
  std::size_t n_heads = 1;
  Tensor<T> wq, bq, wk, bk, wv, bv, wo, bo;  // d x d and d

  std::size_t hidden() const noexcept { return wq.empty() ? 0 : wq.dim(0); }
};

/// Throws SizeError unless d is divisible by n_heads.
template <typename T>
AttentionParams<T> init_attention(std::size_t d, std::size_t n_heads, Rng& rng, double std = 0.02);

/// x is B x L x d (or L x d). Scores and probabilities are materialized for
/// every head at once (B x H x L x L each), without tiling.
template <typename T>
Tensor<T> attention_reference_forward(const AttentionParams<T>& params, const Tensor<T>& x);

/// Probabilities of the last forward call are written here when non-null
/// (B x H x L x L); for tests.
template <typename T>
Tensor<T> attention_reference_forward(const AttentionParams<T>& params, const Tensor<T>& x, Tensor<T>* probs);

}  // namespace codessm::bench
