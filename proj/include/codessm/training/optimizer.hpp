#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "codessm/layers/params.hpp"
#include "codessm/model/checkpoint.hpp"

namespace codessm::training {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;  // applied to DecayGroup::Decay only
  double clip_norm = 1.0;      // global gradient norm; <= 0 disables clipping
};

/// Adam moments, one slot per parameter, in parameter order.
class AdamWState {
 public:
  AdamWState() = default;
  /// Throws ConfigError on duplicate parameter names.
  explicit AdamWState(const std::vector<ParamRef<float>>& params);

  std::uint64_t step() const noexcept { return step_; }
  std::size_t slots() const noexcept { return names_.size(); }

  /// Number of parameters per decay group, indexed by DecayGroup.
  std::vector<std::size_t> group_counts() const;

  std::vector<model::NamedTensor> export_tensors() const;
  /// Restores moments saved by export_tensors; throws CheckpointError on a
  /// missing or mis-shaped slot.
  void import_tensors(const std::vector<model::NamedTensor>& tensors, std::uint64_t step);

 private:
  friend struct AdamW;
  std::vector<std::string> names_;
  std::vector<DecayGroup> groups_;
  std::vector<Tensor<float>> m_, v_;
  std::uint64_t step_ = 0;
};

struct StepStats {
  double grad_norm = 0.0;  // before clipping
  double clip_scale = 1.0;
};

struct AdamW {
  /// One bias-corrected Adam update with decoupled decay. Throws NumericError
  /// naming the first tensor with a non-finite gradient; parameters and state
  /// are untouched in that case.
  static StepStats step(const std::vector<ParamRef<float>>& params, const std::vector<ParamRef<float>>& grads,
                        AdamWState& state, double lr, const AdamWConfig& config);
};

}  // namespace codessm::training
