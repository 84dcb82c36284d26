#pragma once

#include <string>

#include "codessm/layers/gated_layer.hpp"
#include "codessm/layers/params.hpp"

namespace codessm::tasks {

using layers::PadMask;

enum class Pooling { Mean, FirstToken };

std::string to_string(Pooling p);
Pooling pooling_from_string(const std::string& s);

/// B x L x d -> B x d. Throws SizeError for a sample with no valid position.
template <typename T>
Tensor<T> pool_sequence(const Tensor<T>& hidden, const PadMask& mask, Pooling mode = Pooling::Mean);

template <typename T>
Tensor<T> pool_sequence_backward(const Tensor<T>& d_pooled, const PadMask& mask, Pooling mode);

inline constexpr double kRetrievalTemperature = 0.05;

/// Symmetric in-batch cross-entropy over cosine similarities / temperature,
/// matching pairs on the diagonal. Throws SizeError for B < 2 and
/// NumericError for a zero-norm row. Optional outputs receive gradients.
template <typename T>
double retrieval_loss(const Tensor<T>& queries, const Tensor<T>& docs, double temperature, Tensor<T>* d_queries = nullptr,
                      Tensor<T>* d_docs = nullptr);

/// Cosine similarity matrix, rows of a against rows of b.
template <typename T>
Tensor<double> cosine_similarity(const Tensor<T>& a, const Tensor<T>& b);

/// Linear classifier on top of the encoder (per sequence or per position).
template <typename T>
struct ClassifierHead {
  using value_type = T;
  Tensor<T> weight;  // n_out x d
  Tensor<T> bias;    // n_out

  template <typename Self, typename F>
  static void visit(Self& self, const std::string& prefix, F&& fn) {
    fn(prefix + "weight", self.weight, DecayGroup::Decay);
    fn(prefix + "bias", self.bias, DecayGroup::NoDecayBiasNorm);
  }
};

template <typename T>
ClassifierHead<T> init_classifier(std::size_t n_out, std::size_t d, Rng& rng);

}  // namespace codessm::tasks
