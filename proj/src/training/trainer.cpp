#include "codessm/training/trainer.hpp"

#include <chrono>
#include <cmath>
#include <set>

#include "codessm/training/tokenizer.hpp"

namespace codessm::training {

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  if (warmup_steps > total_steps) throw ConfigError("warmup_steps must not exceed total_steps");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (mask_prob < 0.0 || mask_prob >= 1.0) throw ConfigError("mask_prob must lie in [0, 1)");
  if (seq_len == 0) throw ConfigError("seq_len must be >= 1");
  if (log_interval == 0) throw ConfigError("log_interval must be >= 1");
}

AdamWConfig TrainConfig::adam() const {
  AdamWConfig a;
  a.weight_decay = weight_decay;
  a.clip_norm = clip_norm;
  return a;
}

nlohmann::json TrainConfig::to_json() const {
  return {{"lr", lr},
          {"warmup_steps", warmup_steps},
          {"schedule", to_string(schedule)},
          {"weight_decay", weight_decay},
          {"batch_size", batch_size},
          {"total_steps", total_steps},
          {"seed", seed},
          {"mask_prob", mask_prob},
          {"seq_len", seq_len},
          {"log_interval", log_interval},
          {"clip_norm", clip_norm}};
}

namespace {

template <typename U>
U field(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if constexpr (std::is_floating_point_v<U>) {
    if (!v.is_number()) throw ConfigError(std::string("train.") + key + " must be a number");
  } else if constexpr (std::is_integral_v<U>) {
    if (!v.is_number_unsigned()) throw ConfigError(std::string("train.") + key + " must be a non-negative integer");
  } else {
    if (!v.is_string()) throw ConfigError(std::string("train.") + key + " must be a string");
  }
  return v.get<U>();
}

}  // namespace

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("train config must be a JSON object");
  const std::set<std::string> known{"lr",       "warmup_steps", "schedule", "weight_decay", "batch_size", "total_steps",
                                    "seed",     "mask_prob",    "seq_len",  "log_interval", "clip_norm"};
  for (const auto& [k, _] : j.items())
    if (!known.count(k)) throw ConfigError("unknown train key '" + k + "'");
  TrainConfig c;
  if (j.contains("lr")) c.lr = field<double>(j, "lr");
  if (j.contains("warmup_steps")) c.warmup_steps = field<std::uint64_t>(j, "warmup_steps");
  if (j.contains("schedule")) c.schedule = schedule_from_string(field<std::string>(j, "schedule"));
  if (j.contains("weight_decay")) c.weight_decay = field<double>(j, "weight_decay");
  if (j.contains("batch_size")) c.batch_size = field<std::size_t>(j, "batch_size");
  if (j.contains("total_steps")) c.total_steps = field<std::uint64_t>(j, "total_steps");
  if (j.contains("seed")) c.seed = field<std::uint64_t>(j, "seed");
  if (j.contains("mask_prob")) c.mask_prob = field<double>(j, "mask_prob");
  if (j.contains("seq_len")) c.seq_len = field<std::size_t>(j, "seq_len");
  if (j.contains("log_interval")) c.log_interval = field<std::uint64_t>(j, "log_interval");
  if (j.contains("clip_norm")) c.clip_norm = field<double>(j, "clip_norm");
  c.validate();
  return c;
}

TrainConfig TrainConfig::desk() { return TrainConfig{}; }

TrainConfig TrainConfig::paper() {
  TrainConfig c;
  c.lr = 5e-5;
  return c;
}

nlohmann::json MetricRecord::to_json() const {
  nlohmann::json j{{"step", step}, {"loss", loss}, {"lr", lr}, {"wall_ms", wall_ms}};
  j["masked_acc"] = masked_acc ? nlohmann::json(*masked_acc) : nlohmann::json(nullptr);
  return j;
}

NonFiniteLoss::NonFiniteLoss(std::uint64_t s, double loss)
    : NumericError("non-finite loss " + std::to_string(loss) + " at step " + std::to_string(s)), step(s) {}

TrainResult run_loop(const std::vector<ParamRef<float>>& params, const std::vector<ParamRef<float>>& grads,
                     const TrainConfig& config, TrainState& state, const StepFunction& compute,
                     const MetricSink& sink) {
  config.validate();
  if (state.optimizer.slots() == 0 && !params.empty()) state.optimizer = AdamWState(params);
  const auto adam = config.adam();
  const Rng base(config.seed);
  const auto start = std::chrono::steady_clock::now();

  TrainResult result;
  double interval_loss = 0.0;
  std::size_t interval_steps = 0, interval_targets = 0, interval_correct = 0;
  while (state.step < config.total_steps) {
    for (const auto& g : grads) g.tensor->fill(0.0f);
    Rng rng = base.fork(state.step);
    const LossResult r = compute(state.step, rng);
    if (!std::isfinite(r.loss)) throw NonFiniteLoss(state.step, r.loss);
    const double lr = lr_schedule(state.step, config.lr, config.warmup_steps, config.total_steps, config.schedule);
    AdamW::step(params, grads, state.optimizer, lr, adam);
    ++state.step;

    result.losses.push_back(r.loss);
    result.accuracies.push_back(r.accuracy);
    interval_loss += r.loss;
    ++interval_steps;
    interval_targets += r.targets;
    interval_correct += r.correct;
    if (sink && (state.step % config.log_interval == 0 || state.step == config.total_steps)) {
      MetricRecord rec;
      rec.step = state.step;
      rec.loss = interval_loss / static_cast<double>(interval_steps);
      if (interval_targets) rec.masked_acc = static_cast<double>(interval_correct) / interval_targets;
      rec.lr = lr;
      rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      sink(rec);
      interval_loss = 0.0;
      interval_steps = interval_targets = interval_correct = 0;
    }
  }
  return result;
}

TrainResult train_mlm(model::Encoder<float>& model, const WindowSampler& data, const TrainConfig& config,
                      TrainState& state, const MetricSink& sink) {
  if (data.seq_len() != config.seq_len) throw ConfigError("sampler seq_len differs from train config");
  auto grads = zeros_like(model.params());
  const auto params_refs = param_refs(model.params());
  const auto grad_refs = param_refs(grads);
  MaskingOptions mopts;
  mopts.mask_prob = config.mask_prob;
  mopts.mask_id = ByteTokenizer::kMask;
  mopts.special_ids = ByteTokenizer::special_ids();
  const auto vocab = model.config().vocab_size;

  model::EncoderCache<float> cache;
  Tensor<float> d_logits;
  auto compute = [&](std::uint64_t, Rng& rng) {
    const Batch batch = data.sample(config.batch_size, rng);
    const MaskedBatch masked = mlm_mask(batch.ids, batch.mask, vocab, mopts, rng);
    const auto out = model.forward(masked.input_ids, masked.mask, true, rng, true, &cache);
    const LossResult r = masked_cross_entropy(out.logits, masked.labels, &d_logits);
    if (r.targets > 0 && std::isfinite(r.loss)) model.backward(cache, nullptr, &d_logits, grads);
    return r;
  };
  return run_loop(params_refs, grad_refs, config, state, compute, sink);
}

MlmEval evaluate_mlm(const model::Encoder<float>& model, const std::vector<Batch>& batches, double mask_prob,
                     std::uint64_t seed) {
  MaskingOptions mopts;
  mopts.mask_prob = mask_prob;
  mopts.mask_id = ByteTokenizer::kMask;
  mopts.special_ids = ByteTokenizer::special_ids();
  Rng rng(seed);
  MlmEval e;
  double total = 0.0;
  std::size_t correct = 0;
  for (const auto& batch : batches) {
    const MaskedBatch masked = mlm_mask(batch.ids, batch.mask, model.config().vocab_size, mopts, rng);
    const auto out = model.infer(masked.input_ids, masked.mask);
    const LossResult r = masked_cross_entropy(out.logits, masked.labels);
    total += r.loss * static_cast<double>(r.targets);
    correct += r.correct;
    e.targets += r.targets;
  }
  if (e.targets) {
    e.loss = total / static_cast<double>(e.targets);
    e.accuracy = static_cast<double>(correct) / static_cast<double>(e.targets);
  }
  return e;
}

model::Checkpoint make_checkpoint(const model::Encoder<float>& model, const TrainState& state,
                                  const TrainConfig& config) {
  model::Checkpoint ck;
  ck.config = model.config();
  ck.metadata = {{"train", config.to_json()}};
  ck.step = state.step;
  ck.rng = Rng(config.seed, state.step);
  ck.tensors = model::export_params(model.params());
  ck.optimizer = state.optimizer.export_tensors();
  ck.optimizer_step = state.optimizer.step();
  return ck;
}

}  // namespace codessm::training
