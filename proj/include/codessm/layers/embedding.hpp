#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "codessm/layers/gated_layer.hpp"

namespace codessm::layers {

using TokenIds = Tensor<std::int32_t>;  // B x L

/// Token table plus an optional learned absolute-position table.
template <typename T>
struct EmbeddingParams {
  using value_type = T;

  Tensor<T> tokens;     // vocab x d
  Tensor<T> positions;  // max_position x d, empty unless positional

  std::size_t vocab_size() const noexcept { return tokens.empty() ? 0 : tokens.dim(0); }
  std::size_t hidden() const noexcept { return tokens.empty() ? 0 : tokens.dim(1); }
  std::size_t max_position() const noexcept { return positions.empty() ? 0 : positions.dim(0); }
  bool positional() const noexcept { return !positions.empty(); }

  template <typename Self, typename F>
  static void visit(Self& self, const std::string& prefix, F&& fn) {
    fn(prefix + "tokens", self.tokens, DecayGroup::Decay);
    fn(prefix + "positions", self.positions, DecayGroup::Decay);
  }
};

template <typename T>
EmbeddingParams<T> init_embedding(std::size_t vocab, std::size_t d, std::size_t max_position, Rng& rng,
                                  double std = 0.02);

/// Lookup (+ position row when the table exists); padded rows are zero.
/// Throws LengthError when L exceeds the positional table and SizeError for
/// out-of-range ids.
template <typename T>
Tensor<T> embed(const EmbeddingParams<T>& params, const TokenIds& ids, const PadMask& mask);

template <typename T>
void embed_backward(const TokenIds& ids, const PadMask& mask, const Tensor<T>& d_out, EmbeddingParams<T>& grads);

}  // namespace codessm::layers
