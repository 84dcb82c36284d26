#include "codessm/layers/embedding.hpp"

namespace codessm::layers {

template <typename T>
EmbeddingParams<T> init_embedding(std::size_t vocab, std::size_t d, std::size_t max_position, Rng& rng, double std) {
  EmbeddingParams<T> p;
  p.tokens = Tensor<T>({vocab, d});
  for (auto& v : p.tokens.values()) v = static_cast<T>(rng.truncated_normal(std));
  if (max_position > 0) {
    p.positions = Tensor<T>({max_position, d});
    for (auto& v : p.positions.values()) v = static_cast<T>(rng.truncated_normal(std));
  }
  return p;
}

template <typename T>
Tensor<T> embed(const EmbeddingParams<T>& params, const TokenIds& ids, const PadMask& mask) {
  if (ids.rank() != 2) throw SizeError("embed: ids must be B x L");
  const std::size_t batch = ids.dim(0), len = ids.dim(1), d = params.hidden();
  if (mask.batch() != batch || mask.seq_len() != len) throw SizeError("embed: mask does not match ids");
  if (params.positional() && len > params.max_position()) {
    throw LengthError("embed: sequence length " + std::to_string(len) + " exceeds positional table of " +
                      std::to_string(params.max_position()));
  }
  const auto vocab = static_cast<std::int64_t>(params.vocab_size());
  Tensor<T> out({batch, len, d});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < mask.valid_length(b); ++t) {
      const std::int32_t id = ids.at(b, t);
      if (id < 0 || id >= vocab) throw SizeError("embed: token id " + std::to_string(id) + " out of range");
      T* dst = out.data() + (b * len + t) * d;
      const auto row = params.tokens.row(static_cast<std::size_t>(id));
      for (std::size_t c = 0; c < d; ++c) dst[c] = row[c];
      if (params.positional()) {
        const auto pos = params.positions.row(t);
        for (std::size_t c = 0; c < d; ++c) dst[c] += pos[c];
      }
    }
  }
  return out;
}

template <typename T>
void embed_backward(const TokenIds& ids, const PadMask& mask, const Tensor<T>& d_out, EmbeddingParams<T>& grads) {
  const std::size_t len = ids.dim(1), d = d_out.cols();
  for (std::size_t b = 0; b < mask.batch(); ++b) {
    for (std::size_t t = 0; t < mask.valid_length(b); ++t) {
      const T* src = d_out.data() + (b * len + t) * d;
      auto row = grads.tokens.row(static_cast<std::size_t>(ids.at(b, t)));
      for (std::size_t c = 0; c < d; ++c) row[c] += src[c];
      if (!grads.positions.empty()) {
        auto pos = grads.positions.row(t);
        for (std::size_t c = 0; c < d; ++c) pos[c] += src[c];
      }
    }
  }
}

#define CODESSM_INSTANTIATE(T)                                                                              \
  template EmbeddingParams<T> init_embedding<T>(std::size_t, std::size_t, std::size_t, Rng&, double);        \
  template Tensor<T> embed<T>(const EmbeddingParams<T>&, const TokenIds&, const PadMask&);                  \
  template void embed_backward<T>(const TokenIds&, const PadMask&, const Tensor<T>&, EmbeddingParams<T>&);

CODESSM_INSTANTIATE(float)
CODESSM_INSTANTIATE(double)
#undef CODESSM_INSTANTIATE

}  // namespace codessm::layers
