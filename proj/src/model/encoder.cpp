#include "codessm/model/encoder.hpp"

namespace codessm::model {

namespace {

template <typename U, typename T>
layers::GatedLayerParams<U> cast_layer(const layers::GatedLayerParams<T>& p) {
  layers::GatedLayerParams<U> out;
  std::vector<Tensor<U>*> dst;
  layers::GatedLayerParams<U>::visit(out, "", [&](const std::string&, Tensor<U>& t, DecayGroup) { dst.push_back(&t); });
  std::size_t i = 0;
  layers::GatedLayerParams<T>::visit(p, "", [&](const std::string&, const Tensor<T>& t, DecayGroup) {
    *dst[i++] = t.template cast<U>();
  });
  return out;
}

// Zero-filled parameters with the shapes implied by the config.
template <typename T>
EncoderParams<T> shaped(const EncoderConfig& c) {
  EncoderParams<T> p;
  p.embedding.tokens = Tensor<T>({c.vocab_size, c.hidden});
  if (c.positional()) p.embedding.positions = Tensor<T>({c.max_position, c.hidden});
  for (std::size_t i = 0; i < c.n_layers; ++i) p.layers.emplace_back(c.hidden, c.state_size, c.gate_bias);
  p.final_gamma = Tensor<T>({c.hidden}, T(1));
  p.final_beta = Tensor<T>({c.hidden});
  if (c.bert_head) {
    p.head_dense_w = Tensor<T>({c.hidden, c.hidden});
    p.head_dense_b = Tensor<T>({c.hidden});
    p.head_ln_gamma = Tensor<T>({c.hidden}, T(1));
    p.head_ln_beta = Tensor<T>({c.hidden});
  }
  if (!c.tie_mlm_head) p.head_weight = Tensor<T>({c.vocab_size, c.hidden});
  p.head_bias = Tensor<T>({c.vocab_size});
  return p;
}

template <typename T>
const Tensor<T>& vocab_projection(const EncoderParams<T>& p) {
  return p.head_weight.empty() ? p.embedding.tokens : p.head_weight;
}
template <typename T>
Tensor<T>& vocab_projection(EncoderParams<T>& p) {
  return p.head_weight.empty() ? p.embedding.tokens : p.head_weight;
}

}  // namespace

template <typename T>
template <typename U>
EncoderParams<U> EncoderParams<T>::cast() const {
  EncoderParams<U> out;
  out.embedding.tokens = embedding.tokens.template cast<U>();
  out.embedding.positions = embedding.positions.template cast<U>();
  for (const auto& l : layers) out.layers.push_back(cast_layer<U>(l));
  out.final_gamma = final_gamma.template cast<U>();
  out.final_beta = final_beta.template cast<U>();
  out.head_dense_w = head_dense_w.template cast<U>();
  out.head_dense_b = head_dense_b.template cast<U>();
  out.head_ln_gamma = head_ln_gamma.template cast<U>();
  out.head_ln_beta = head_ln_beta.template cast<U>();
  out.head_weight = head_weight.template cast<U>();
  out.head_bias = head_bias.template cast<U>();
  return out;
}

template <typename T>
EncoderParams<T> init_params(const EncoderConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  EncoderParams<T> p = shaped<T>(config);
  p.embedding = layers::init_embedding<T>(config.vocab_size, config.hidden,
                                          config.positional() ? config.max_position : 0, rng);
  for (auto& layer : p.layers) {
    layer = layers::init_gated_layer<T>(config.hidden, config.state_size, config.gate_bias, rng);
  }
  for (auto* w : {&p.head_dense_w, &p.head_weight}) {
    for (auto& v : w->values()) v = static_cast<T>(rng.truncated_normal(0.02));
  }
  return p;
}

template <typename T>
void check_param_shapes(const EncoderConfig& config, const EncoderParams<T>& params) {
  const auto expected = shaped<T>(config);
  const auto want = param_refs(expected);
  const auto have = param_refs(params);
  for (std::size_t i = 0; i < want.size(); ++i) {
    if (i >= have.size() || have[i].name != want[i].name) {
      throw SizeError("parameter '" + want[i].name + "' missing");
    }
    if (have[i].tensor->shape() != want[i].tensor->shape()) {
      throw SizeError("parameter '" + want[i].name + "' has shape " + shape_string(have[i].tensor->shape()) +
                      ", config implies " + shape_string(want[i].tensor->shape()));
    }
  }
  if (have.size() != want.size()) throw SizeError("unexpected parameter '" + have[want.size()].name + "'");
}

template <typename T>
Encoder<T>::Encoder(EncoderConfig config, EncoderParams<T> params)
    : config_(std::move(config)), params_(std::move(params)) {
  config_.validate();
  check_param_shapes(config_, params_);
  layer_opts_ = config_.layer_options();
}

template <typename T>
Encoder<T> Encoder<T>::initialize(const EncoderConfig& config, std::uint64_t seed) {
  return Encoder(config, init_params<T>(config, seed));
}

template <typename T>
EncoderOutput<T> Encoder<T>::forward(const TokenIds& ids, const PadMask& mask, bool training, Rng& rng,
                                     bool with_logits, EncoderCache<T>* cache) const {
  Tensor<T> x = layers::embed(params_.embedding, ids, mask);
  if (cache) {
    cache->mask = mask;
    cache->ids = ids;
    cache->layers.assign(params_.layers.size(), {});
  }
  for (std::size_t i = 0; i < params_.layers.size(); ++i) {
    x = layers::layer_forward(params_.layers[i], layer_opts_, x, mask, training, rng,
                              cache ? &cache->layers[i] : nullptr);
  }
  EncoderOutput<T> out;
  out.hidden =
      layer_norm(x, params_.final_gamma, params_.final_beta, kLayerNormEps, cache ? &cache->final_ln : nullptr);
  layers::zero_padding(out.hidden, mask);
  if (!with_logits) {
    if (cache) cache->hidden = out.hidden;
    return out;
  }

  Tensor<T> head_in;
  if (config_.bert_head) {
    Tensor<T> pre = linear(out.hidden, params_.head_dense_w, &params_.head_dense_b);
    Tensor<T> act = gelu(pre);
    head_in = layer_norm(act, params_.head_ln_gamma, params_.head_ln_beta, kLayerNormEps,
                         cache ? &cache->head_ln : nullptr);
    if (cache) {
      cache->head_pre = std::move(pre);
      cache->head_act = std::move(act);
    }
  } else {
    head_in = out.hidden;
  }
  out.logits = linear(head_in, vocab_projection(params_), &params_.head_bias);
  if (cache) {
    cache->hidden = out.hidden;
    cache->head_in = std::move(head_in);
  }
  return out;
}

template <typename T>
EncoderOutput<T> Encoder<T>::infer(const TokenIds& ids, const PadMask& mask) const {
  Rng unused(0);
  return forward(ids, mask, false, unused);
}

template <typename T>
void Encoder<T>::backward(const EncoderCache<T>& cache, const Tensor<T>* d_hidden, const Tensor<T>* d_logits,
                          EncoderParams<T>& grads) const {
  Tensor<T> d_h(cache.hidden.shape());
  if (d_logits) {
    Tensor<T> d_in = linear_backward(*d_logits, cache.head_in, vocab_projection(params_), vocab_projection(grads),
                                     &grads.head_bias);
    if (config_.bert_head) {
      Tensor<T> d_act = layer_norm_backward(d_in, params_.head_ln_gamma, cache.head_ln, grads.head_ln_gamma,
                                            grads.head_ln_beta);
      for (std::size_t i = 0; i < d_act.size(); ++i) d_act[i] *= gelu_derivative(cache.head_pre[i]);
      d_in = linear_backward(d_act, cache.hidden, params_.head_dense_w, grads.head_dense_w, &grads.head_dense_b);
    }
    add_inplace(d_h, d_in);
  }
  if (d_hidden) add_inplace(d_h, *d_hidden);
  layers::zero_padding(d_h, cache.mask);

  Tensor<T> d_x = layer_norm_backward(d_h, params_.final_gamma, cache.final_ln, grads.final_gamma, grads.final_beta);
  for (std::size_t i = params_.layers.size(); i-- > 0;) {
    d_x = layers::layer_backward(params_.layers[i], layer_opts_, cache.layers[i], d_x, grads.layers[i]);
  }
  layers::embed_backward(cache.ids, cache.mask, d_x, grads.embedding);
}

template struct EncoderParams<float>;
template struct EncoderParams<double>;
template EncoderParams<double> EncoderParams<float>::cast<double>() const;
template EncoderParams<float> EncoderParams<double>::cast<float>() const;
template EncoderParams<float> init_params<float>(const EncoderConfig&, std::uint64_t);
template EncoderParams<double> init_params<double>(const EncoderConfig&, std::uint64_t);
template void check_param_shapes<float>(const EncoderConfig&, const EncoderParams<float>&);
template void check_param_shapes<double>(const EncoderConfig&, const EncoderParams<double>&);
template class Encoder<float>;
template class Encoder<double>;

}  // namespace codessm::model
