#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <json.hpp>

#include "codessm/model/checkpoint.hpp"
#include "codessm/model/encoder.hpp"
#include "codessm/training/corpus.hpp"
#include "codessm/training/loss.hpp"
#include "codessm/training/optimizer.hpp"
#include "codessm/training/schedule.hpp"

namespace codessm::training {

struct TrainConfig {
  double lr = 1e-3;
  std::uint64_t warmup_steps = 300;
  ScheduleKind schedule = ScheduleKind::Cosine;
  double weight_decay = 0.01;
  std::size_t batch_size = 16;
  std::uint64_t total_steps = 3000;
  std::uint64_t seed = 0;
  double mask_prob = 0.15;
  std::size_t seq_len = 64;
  std::uint64_t log_interval = 100;
  double clip_norm = 1.0;

  /// Throws ConfigError on the first violated invariant.
  void validate() const;
  AdamWConfig adam() const;

  nlohmann::json to_json() const;
  /// Rejects unknown keys and ill-typed values with ConfigError.
  static TrainConfig from_json(const nlohmann::json& j);

  /// Small-model defaults (lr 1e-3).
  static TrainConfig desk();
  /// Large-model pretraining learning rate (5e-5).
  static TrainConfig paper();
};

struct MetricRecord {
  std::uint64_t step = 0;  // 1-based count of completed updates
  double loss = 0.0;       // mean over the log interval
  std::optional<double> masked_acc;
  double lr = 0.0;
  double wall_ms = 0.0;  // since the loop started

  nlohmann::json to_json() const;
};

using MetricSink = std::function<void(const MetricRecord&)>;

/// Raised before an update would consume a non-finite loss; parameters still
/// hold the last good values.
class NonFiniteLoss : public NumericError {
 public:
  NonFiniteLoss(std::uint64_t step, double loss);
  std::uint64_t step;
};

struct TrainState {
  AdamWState optimizer;
  std::uint64_t step = 0;
};

struct TrainResult {
  std::vector<double> losses;  // one per step
  std::vector<std::optional<double>> accuracies;
};

/// Per-step work for the generic loop: fill the (zeroed) gradients and
/// return the loss of the step.
using StepFunction = std::function<LossResult(std::uint64_t step, Rng& rng)>;

/// Deterministic optimization loop shared by pretraining and fine-tuning.
/// The rng for step s is Rng(config.seed).fork(s), so a resumed run matches
/// an uninterrupted one.
TrainResult run_loop(const std::vector<ParamRef<float>>& params, const std::vector<ParamRef<float>>& grads,
                     const TrainConfig& config, TrainState& state, const StepFunction& compute,
                     const MetricSink& sink = {});

/// MLM pretraining over windows drawn from the sampler.
TrainResult train_mlm(model::Encoder<float>& model, const WindowSampler& data, const TrainConfig& config,
                      TrainState& state, const MetricSink& sink = {});

struct MlmEval {
  double loss = 0.0;
  std::optional<double> accuracy;
  std::size_t targets = 0;
};

/// Masked-token loss and accuracy over fixed batches with masks drawn from
/// Rng(seed); identical inputs give identical masks across models.
MlmEval evaluate_mlm(const model::Encoder<float>& model, const std::vector<Batch>& batches, double mask_prob,
                     std::uint64_t seed);

model::Checkpoint make_checkpoint(const model::Encoder<float>& model, const TrainState& state,
                                  const TrainConfig& config);

}  // namespace codessm::training
