#pragma once

#include <cstddef>
#include <optional>

#include "codessm/training/masking.hpp"

namespace codessm::training {

struct LossResult {
  double loss = 0.0;
  std::optional<double> accuracy;  // absent when no position carries a label
  std::size_t targets = 0;
  std::size_t correct = 0;
};

/// Mean negative log-softmax over labelled positions. When d_logits is given
/// it receives dLoss/dLogits (zero at unlabelled positions). Argmax ties go to
/// the lowest id.
template <typename T>
LossResult masked_cross_entropy(const Tensor<T>& logits, const TokenIds& labels, Tensor<T>* d_logits = nullptr);

}  // namespace codessm::training
