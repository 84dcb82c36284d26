#pragma once

#include <optional>
#include <set>

#include "codessm/tasks/metrics.hpp"
#include "codessm/tasks/synthetic.hpp"
#include "codessm/training/trainer.hpp"

namespace codessm::tasks {

/// Pretrained encoder plus a randomly initialized task head (none for
/// retrieval, which compares pooled vectors directly).
struct TaskModel {
  model::Encoder<float> encoder;
  ClassifierHead<float> head;
  TaskSpec spec;

  std::vector<ParamRef<float>> param_refs();
};

TaskModel make_task_model(model::Encoder<float> encoder, const TaskSpec& spec, std::uint64_t seed);

/// [CLS] text_a, or [CLS] text_a [SEP] text_b for pair tasks, truncated to
/// the context length.
std::vector<std::int32_t> encode_example(const Example& e, const TaskSpec& spec, bool second = false);

/// Fine-tunes through training::run_loop. config.schedule must be linear.
training::TrainResult finetune(TaskModel& model, const Dataset& train, const training::TrainConfig& config,
                               training::TrainState& state, const training::MetricSink& sink = {},
                               double temperature = kRetrievalTemperature);

/// Retrieval: mrr. seq_class: accuracy, f1_macro. pair_class: precision,
/// recall, f1, accuracy. token_class: overall_f1, top100_f1 over top_types
/// (taken from the evaluation golds when absent).
MetricReport evaluate_task(const TaskModel& model, const Dataset& test,
                           const std::optional<std::set<int>>& top = std::nullopt);

model::Checkpoint make_task_checkpoint(const TaskModel& model, const training::TrainState& state,
                                       const training::TrainConfig& config);
/// Restores a checkpoint written by make_task_checkpoint.
TaskModel load_task_model(const model::Checkpoint& ckpt);

}  // namespace codessm::tasks
