#include "codessm/training/loss.hpp"

#include <cmath>
#include <string>

#include "codessm/numerics/errors.hpp"

namespace codessm::training {

template <typename T>
LossResult masked_cross_entropy(const Tensor<T>& logits, const TokenIds& labels, Tensor<T>* d_logits) {
  const std::size_t vocab = logits.cols();
  if (logits.rows() != labels.size()) {
    throw SizeError("logits " + shape_string(logits.shape()) + " do not match labels " + shape_string(labels.shape()));
  }
  if (d_logits) *d_logits = Tensor<T>(logits.shape());

  LossResult r;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == kIgnoreLabel) continue;
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= vocab) {
      throw SizeError("label " + std::to_string(labels[i]) + " outside vocabulary of " + std::to_string(vocab));
    }
    ++r.targets;
  }
  if (r.targets == 0) return r;

  const double inv = 1.0 / static_cast<double>(r.targets);
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == kIgnoreLabel) continue;
    const auto row = logits.row(i);
    std::size_t best = 0;
    for (std::size_t v = 1; v < vocab; ++v)
      if (row[v] > row[best]) best = v;
    const double mx = row[best];
    double z = 0.0;
    for (std::size_t v = 0; v < vocab; ++v) z += std::exp(static_cast<double>(row[v]) - mx);
    const double log_z = mx + std::log(z);
    const auto label = static_cast<std::size_t>(labels[i]);
    total += log_z - static_cast<double>(row[label]);
    if (best == label) ++r.correct;
    if (d_logits) {
      auto g = d_logits->row(i);
      for (std::size_t v = 0; v < vocab; ++v) g[v] = static_cast<T>(std::exp(static_cast<double>(row[v]) - log_z) * inv);
      g[label] -= static_cast<T>(inv);
    }
  }
  r.loss = total * inv;
  r.accuracy = static_cast<double>(r.correct) * inv;
  return r;
}

template LossResult masked_cross_entropy<float>(const Tensor<float>&, const TokenIds&, Tensor<float>*);
template LossResult masked_cross_entropy<double>(const Tensor<double>&, const TokenIds&, Tensor<double>*);

}  // namespace codessm::training
