#include "codessm/training/optimizer.hpp"

#include <cmath>
#include <set>

namespace codessm::training {

AdamWState::AdamWState(const std::vector<ParamRef<float>>& params) {
  std::set<std::string> seen;
  for (const auto& p : params) {
    if (!seen.insert(p.name).second) throw ConfigError("duplicate parameter name '" + p.name + "'");
    names_.push_back(p.name);
    groups_.push_back(p.group);
    m_.emplace_back(p.tensor->shape());
    v_.emplace_back(p.tensor->shape());
  }
}

std::vector<std::size_t> AdamWState::group_counts() const {
  std::vector<std::size_t> counts(3, 0);
  for (auto g : groups_) ++counts[static_cast<std::size_t>(g)];
  return counts;
}

std::vector<model::NamedTensor> AdamWState::export_tensors() const {
  std::vector<model::NamedTensor> out;
  for (std::size_t i = 0; i < names_.size(); ++i) {
    out.push_back({"adam.m." + names_[i], m_[i]});
    out.push_back({"adam.v." + names_[i], v_[i]});
  }
  return out;
}

void AdamWState::import_tensors(const std::vector<model::NamedTensor>& tensors, std::uint64_t step) {
  auto lookup = [&](const std::string& name, const Tensor<float>& like) -> const Tensor<float>& {
    for (const auto& t : tensors) {
      if (t.name != name) continue;
      if (t.value.shape() != like.shape()) {
        throw model::CheckpointError("optimizer slot '" + name + "' has shape " + shape_string(t.value.shape()));
      }
      return t.value;
    }
    throw model::CheckpointError("optimizer slot '" + name + "' missing");
  };
  for (std::size_t i = 0; i < names_.size(); ++i) {
    m_[i] = lookup("adam.m." + names_[i], m_[i]);
    v_[i] = lookup("adam.v." + names_[i], v_[i]);
  }
  step_ = step;
}

StepStats AdamW::step(const std::vector<ParamRef<float>>& params, const std::vector<ParamRef<float>>& grads,
                      AdamWState& state, double lr, const AdamWConfig& config) {
  if (params.size() != grads.size() || params.size() != state.slots()) {
    throw SizeError("optimizer expects " + std::to_string(state.slots()) + " parameters, got " +
                    std::to_string(params.size()) + " and " + std::to_string(grads.size()) + " gradients");
  }
  StepStats stats;
  double sq = 0.0;
  for (std::size_t i = 0; i < grads.size(); ++i) {
    require_same_shape(params[i].tensor->shape(), grads[i].tensor->shape(), params[i].name.c_str());
    double local = 0.0;
    for (float g : grads[i].tensor->values()) local += static_cast<double>(g) * g;
    if (!std::isfinite(local)) throw NumericError("non-finite gradient in '" + params[i].name + "'");
    sq += local;
  }
  stats.grad_norm = std::sqrt(sq);
  if (config.clip_norm > 0.0 && stats.grad_norm > config.clip_norm) stats.clip_scale = config.clip_norm / stats.grad_norm;

  ++state.step_;
  const double t = static_cast<double>(state.step_);
  const double bc1 = 1.0 - std::pow(config.beta1, t);
  const double bc2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& w = *params[i].tensor;
    const auto& g = *grads[i].tensor;
    auto& m = state.m_[i];
    auto& v = state.v_[i];
    const double decay = state.groups_[i] == DecayGroup::Decay ? config.weight_decay : 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double gk = static_cast<double>(g[k]) * stats.clip_scale;
      const double mk = config.beta1 * m[k] + (1.0 - config.beta1) * gk;
      const double vk = config.beta2 * v[k] + (1.0 - config.beta2) * gk * gk;
      m[k] = static_cast<float>(mk);
      v[k] = static_cast<float>(vk);
      const double update = (mk / bc1) / (std::sqrt(vk / bc2) + config.eps);
      w[k] = static_cast<float>(w[k] * (1.0 - lr * decay) - lr * update);
    }
  }
  return stats;
}

}  // namespace codessm::training
