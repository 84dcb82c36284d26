#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>

#include "codessm/numerics/rng.hpp"
#include "codessm/numerics/tensor.hpp"

namespace codessm {

/// One parameter tensor under test and its analytic gradient.
struct GradCheckParam {
  std::string name;
  Tensor<double>* value;
  const Tensor<double>* analytic;
};

struct GradCheckOptions {
  double epsilon = 1e-5;
  /// Relative error is |a - n| / max(|a|, |n|, floor); the floor keeps
  /// entries whose true gradient is ~0 from dominating with roundoff.
  double denominator_floor = 1e-6;
  /// 0 checks every entry; otherwise a seeded sample of this many entries
  /// per tensor (all entries when the tensor is smaller).
  std::size_t max_entries_per_tensor = 0;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t entries_checked = 0;
};

/// Central differences (f(w+e) - f(w-e)) / 2e against analytic gradients.
/// loss_fn reads the parameters in place; every perturbed entry is restored.
/// Throws NumericError naming the parameter when the loss is not finite.
inline GradCheckResult finite_diff_check(const std::function<double()>& loss_fn, std::span<const GradCheckParam> params,
                                         const GradCheckOptions& opts = {}) {
  GradCheckResult result;
  Rng rng(opts.seed);
  for (const auto& p : params) {
    if (!p.value->same_shape(*p.analytic)) {
      throw SizeError("gradcheck: analytic gradient shape mismatch for " + p.name);
    }
    const std::size_t n = p.value->size();
    const bool sample = opts.max_entries_per_tensor != 0 && n > opts.max_entries_per_tensor;
    const std::size_t count = sample ? opts.max_entries_per_tensor : n;
    for (std::size_t j = 0; j < count; ++j) {
      const std::size_t i = sample ? static_cast<std::size_t>(rng.uniform_int(n)) : j;
      double& w = (*p.value)[i];
      const double saved = w;
      w = saved + opts.epsilon;
      const double fp = loss_fn();
      w = saved - opts.epsilon;
      const double fm = loss_fn();
      w = saved;
      if (!std::isfinite(fp) || !std::isfinite(fm)) {
        throw NumericError("gradcheck: non-finite loss while perturbing " + p.name + "[" + std::to_string(i) + "]");
      }
      const double numeric = (fp - fm) / (2.0 * opts.epsilon);
      const double analytic = (*p.analytic)[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), opts.denominator_floor});
      const double rel = std::abs(analytic - numeric) / denom;
      ++result.entries_checked;
      if (rel > result.max_rel_error || result.worst_param.empty()) {
        result.max_rel_error = std::max(rel, result.max_rel_error);
        if (rel >= result.max_rel_error) {
          result.worst_param = p.name;
          result.worst_index = i;
          result.worst_analytic = analytic;
          result.worst_numeric = numeric;
        }
      }
    }
  }
  return result;
}

}  // namespace codessm
