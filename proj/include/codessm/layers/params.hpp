#pragma once

#include <string>
#include <vector>

#include "codessm/numerics/tensor.hpp"

namespace codessm {

/// Weight-decay partition. Every parameter belongs to exactly one group.
enum class DecayGroup {
  Decay,       // projection and embedding weights
  NoDecaySsm,  // SSM kernel parameters
  NoDecayBiasNorm,  // biases and LayerNorm gamma/beta
};

inline const char* decay_group_name(DecayGroup g) {
  switch (g) {
    case DecayGroup::Decay: return "decay";
    case DecayGroup::NoDecaySsm: return "no_decay_ssm";
    case DecayGroup::NoDecayBiasNorm: return "no_decay_bias_norm";
  }
  return "?";
}

template <typename T>
struct ParamRef {
  std::string name;
  Tensor<T>* tensor;
  DecayGroup group;
};

template <typename T>
struct ConstParamRef {
  std::string name;
  const Tensor<T>* tensor;
  DecayGroup group;
};

/// Flattens any struct exposing `visit(self, prefix, fn)` into named refs.
/// Empty (optional, absent) tensors are skipped.
template <typename P>
auto param_refs(P& params, const std::string& prefix = "") {
  using T = typename std::remove_const_t<P>::value_type;
  using Ref = std::conditional_t<std::is_const_v<P>, ConstParamRef<T>, ParamRef<T>>;
  std::vector<Ref> refs;
  std::remove_const_t<P>::visit(params, prefix, [&](const std::string& name, auto& tensor, DecayGroup group) {
    if (!tensor.empty()) refs.push_back(Ref{name, &tensor, group});
  });
  return refs;
}

/// Copy of params with every tensor zero-filled (gradient/moment buffers).
template <typename P>
P zeros_like(const P& params) {
  P z = params;
  for (auto& r : param_refs(z)) r.tensor->fill(typename P::value_type(0));
  return z;
}

}  // namespace codessm
