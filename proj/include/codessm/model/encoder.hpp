#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "codessm/layers/embedding.hpp"
#include "codessm/layers/gated_layer.hpp"
#include "codessm/model/config.hpp"

namespace codessm::model {

using layers::PadMask;
using layers::TokenIds;

template <typename T>
struct EncoderParams {
  using value_type = T;

  layers::EmbeddingParams<T> embedding;
  std::vector<layers::GatedLayerParams<T>> layers;
  Tensor<T> final_gamma, final_beta;
  // MLM head. head_weight is empty when tied to the token embedding; the
  // dense/LayerNorm block exists only for the BERT-style head.
  Tensor<T> head_dense_w, head_dense_b, head_ln_gamma, head_ln_beta;
  Tensor<T> head_weight;
  Tensor<T> head_bias;

  template <typename Self, typename F>
  static void visit(Self& self, const std::string& prefix, F&& fn) {
    layers::EmbeddingParams<T>::visit(self.embedding, prefix + "embedding.", fn);
    for (std::size_t i = 0; i < self.layers.size(); ++i) {
      layers::GatedLayerParams<T>::visit(self.layers[i], prefix + "layers." + std::to_string(i) + ".", fn);
    }
    fn(prefix + "final_ln.gamma", self.final_gamma, DecayGroup::NoDecayBiasNorm);
    fn(prefix + "final_ln.beta", self.final_beta, DecayGroup::NoDecayBiasNorm);
    fn(prefix + "head.dense.weight", self.head_dense_w, DecayGroup::Decay);
    fn(prefix + "head.dense.bias", self.head_dense_b, DecayGroup::NoDecayBiasNorm);
    fn(prefix + "head.ln.gamma", self.head_ln_gamma, DecayGroup::NoDecayBiasNorm);
    fn(prefix + "head.ln.beta", self.head_ln_beta, DecayGroup::NoDecayBiasNorm);
    fn(prefix + "head.weight", self.head_weight, DecayGroup::Decay);
    fn(prefix + "head.bias", self.head_bias, DecayGroup::NoDecayBiasNorm);
  }

  template <typename U>
  EncoderParams<U> cast() const;
};

/// Truncated-normal(0.02) projections and embeddings, LayerNorm gamma = 1,
/// beta = 0, S4D-Lin kernels. Deterministic in the seed.
template <typename T>
EncoderParams<T> init_params(const EncoderConfig& config, std::uint64_t seed);

template <typename T>
struct EncoderCache {
  PadMask mask;
  TokenIds ids;
  std::vector<layers::GatedLayerCache<T>> layers;
  LayerNormCache<T> final_ln;
  Tensor<T> hidden;
  Tensor<T> head_pre, head_act;
  LayerNormCache<T> head_ln;
  Tensor<T> head_in;  // input of the vocabulary projection
};

template <typename T>
struct EncoderOutput {
  Tensor<T> hidden;  // B x L x d, after the final LayerNorm
  Tensor<T> logits;  // B x L x vocab, empty when not requested
};

/// Embedding, gated layers, final LayerNorm and MLM head.
template <typename T>
class Encoder {
 public:
  /// Throws ConfigError on an invalid configuration.
  Encoder(EncoderConfig config, EncoderParams<T> params);
  static Encoder initialize(const EncoderConfig& config, std::uint64_t seed);

  const EncoderConfig& config() const noexcept { return config_; }
  const EncoderParams<T>& params() const noexcept { return params_; }
  EncoderParams<T>& params() noexcept { return params_; }

  /// rng feeds dropout only (Variant::Dropout with training = true).
  EncoderOutput<T> forward(const TokenIds& ids, const PadMask& mask, bool training, Rng& rng, bool with_logits = true,
                           EncoderCache<T>* cache = nullptr) const;
  EncoderOutput<T> infer(const TokenIds& ids, const PadMask& mask) const;

  /// Accumulates parameter gradients. Either upstream gradient may be null.
  void backward(const EncoderCache<T>& cache, const Tensor<T>* d_hidden, const Tensor<T>* d_logits,
                EncoderParams<T>& grads) const;

 private:
  EncoderConfig config_;
  EncoderParams<T> params_;
  layers::LayerOptions layer_opts_;
};

/// Throws SizeError naming the first tensor whose shape disagrees with config.
template <typename T>
void check_param_shapes(const EncoderConfig& config, const EncoderParams<T>& params);

}  // namespace codessm::model
