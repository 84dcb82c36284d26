#include "codessm/tasks/finetune.hpp"

#include <algorithm>

#include "codessm/training/tokenizer.hpp"

namespace codessm::tasks {

using training::ByteTokenizer;
using training::kIgnoreLabel;

std::vector<ParamRef<float>> TaskModel::param_refs() {
  auto refs = codessm::param_refs(encoder.params());
  for (auto& r : codessm::param_refs(head, "task_head.")) refs.push_back(r);
  return refs;
}

TaskModel make_task_model(model::Encoder<float> encoder, const TaskSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng = Rng(seed).fork(0x7a5c);
  ClassifierHead<float> head;
  const std::size_t d = encoder.config().hidden;
  if (spec.kind == TaskKind::SeqClass || spec.kind == TaskKind::PairClass) {
    head = init_classifier<float>(spec.n_labels, d, rng);
  } else if (spec.kind == TaskKind::TokenClass) {
    head = init_classifier<float>(spec.n_types, d, rng);
  }
  return TaskModel{std::move(encoder), std::move(head), spec};
}

std::vector<std::int32_t> encode_example(const Example& e, const TaskSpec& spec, bool second) {
  std::vector<std::int32_t> ids{ByteTokenizer::kCls};
  const auto a = ByteTokenizer::encode(second ? e.text_b : e.text_a);
  ids.insert(ids.end(), a.begin(), a.end());
  if (spec.kind == TaskKind::PairClass) {
    ids.push_back(ByteTokenizer::kSep);
    const auto b = ByteTokenizer::encode(e.text_b);
    ids.insert(ids.end(), b.begin(), b.end());
  }
  if (ids.size() > spec.context_length) ids.resize(spec.context_length);
  return ids;
}

namespace {

struct Encoded {
  training::TokenIds ids;
  PadMask mask;
};

Encoded pack(const std::vector<std::vector<std::int32_t>>& seqs) {
  std::size_t len = 1;
  for (const auto& s : seqs) len = std::max(len, s.size());
  training::TokenIds ids({seqs.size(), len}, ByteTokenizer::kPad);
  std::vector<std::size_t> lengths;
  for (std::size_t b = 0; b < seqs.size(); ++b) {
    std::copy(seqs[b].begin(), seqs[b].end(), ids.data() + b * len);
    lengths.push_back(seqs[b].size());
  }
  return {std::move(ids), PadMask(len, std::move(lengths))};
}

// Per-position labels aligned with encode_example (shifted by the CLS token).
training::TokenIds token_labels(const std::vector<const Example*>& batch, const Encoded& enc) {
  const std::size_t len = enc.mask.seq_len();
  training::TokenIds labels(enc.ids.shape(), kIgnoreLabel);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& types = batch[b]->token_types;
    for (std::size_t t = 1; t < enc.mask.valid_length(b) && t - 1 < types.size(); ++t) {
      if (types[t - 1] != kUnannotated) labels[b * len + t] = types[t - 1];
    }
  }
  return labels;
}

Tensor<float> pooled(const model::Encoder<float>& enc, const Encoded& in, Pooling pooling) {
  return pool_sequence(enc.infer(in.ids, in.mask).hidden, in.mask, pooling);
}

std::size_t argmax(std::span<const float> row) {
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

}  // namespace

training::TrainResult finetune(TaskModel& m, const Dataset& train, const training::TrainConfig& config,
                               training::TrainState& state, const training::MetricSink& sink, double temperature) {
  if (config.schedule != training::ScheduleKind::Linear) throw ConfigError("fine-tuning uses the linear schedule");
  if (train.examples.empty()) throw ConfigError("training set is empty");
  if (train.spec.kind != m.spec.kind) throw ConfigError("dataset task does not match the model head");

  auto enc_grads = zeros_like(m.encoder.params());
  auto head_grads = zeros_like(m.head);
  auto grad_refs = param_refs(enc_grads);
  for (auto& r : param_refs(head_grads, "task_head.")) grad_refs.push_back(r);
  const auto params = m.param_refs();
  const auto& spec = m.spec;

  auto compute = [&](std::uint64_t, Rng& rng) {
    std::vector<const Example*> batch;
    for (std::size_t i = 0; i < config.batch_size; ++i) {
      batch.push_back(&train.examples[rng.uniform_int(train.examples.size())]);
    }
    training::LossResult r;
    if (spec.kind == TaskKind::Retrieval) {
      std::vector<std::vector<std::int32_t>> qs, ds;
      for (const auto* e : batch) {
        qs.push_back(encode_example(*e, spec));
        ds.push_back(encode_example(*e, spec, true));
      }
      const Encoded q = pack(qs), d = pack(ds);
      model::EncoderCache<float> cq, cd;
      const auto hq = m.encoder.forward(q.ids, q.mask, true, rng, false, &cq).hidden;
      const auto hd = m.encoder.forward(d.ids, d.mask, true, rng, false, &cd).hidden;
      Tensor<float> gq, gd;
      r.loss = retrieval_loss(pool_sequence(hq, q.mask, spec.pooling), pool_sequence(hd, d.mask, spec.pooling),
                              temperature, &gq, &gd);
      r.targets = batch.size();
      if (std::isfinite(r.loss)) {
        const auto dq = pool_sequence_backward(gq, q.mask, spec.pooling);
        const auto dd = pool_sequence_backward(gd, d.mask, spec.pooling);
        m.encoder.backward(cq, &dq, nullptr, enc_grads);
        m.encoder.backward(cd, &dd, nullptr, enc_grads);
      }
      return r;
    }

    std::vector<std::vector<std::int32_t>> seqs;
    for (const auto* e : batch) seqs.push_back(encode_example(*e, spec));
    const Encoded in = pack(seqs);
    model::EncoderCache<float> cache;
    const auto hidden = m.encoder.forward(in.ids, in.mask, true, rng, false, &cache).hidden;
    Tensor<float> d_hidden;
    if (spec.kind == TaskKind::TokenClass) {
      const auto labels = token_labels(batch, in);
      const auto logits = linear(hidden, m.head.weight, &m.head.bias);
      Tensor<float> d_logits;
      r = training::masked_cross_entropy(logits, labels, &d_logits);
      d_hidden = linear_backward(d_logits, hidden, m.head.weight, head_grads.weight, &head_grads.bias);
    } else {
      const auto pooled_h = pool_sequence(hidden, in.mask, spec.pooling);
      const auto logits = linear(pooled_h, m.head.weight, &m.head.bias);
      training::TokenIds labels({batch.size(), 1});
      for (std::size_t b = 0; b < batch.size(); ++b) labels[b] = batch[b]->label;
      Tensor<float> d_logits;
      r = training::masked_cross_entropy(logits, labels, &d_logits);
      const auto d_pooled = linear_backward(d_logits, pooled_h, m.head.weight, head_grads.weight, &head_grads.bias);
      d_hidden = pool_sequence_backward(d_pooled, in.mask, spec.pooling);
    }
    if (r.targets > 0 && std::isfinite(r.loss)) m.encoder.backward(cache, &d_hidden, nullptr, enc_grads);
    return r;
  };
  return training::run_loop(params, grad_refs, config, state, compute, sink);
}

MetricReport evaluate_task(const TaskModel& m, const Dataset& test, const std::optional<std::set<int>>& top) {
  if (test.examples.empty()) throw ConfigError("evaluation set is empty");
  const auto& spec = m.spec;
  constexpr std::size_t kBatch = 16;
  MetricReport report;
  report.task = to_string(spec.kind);
  report.samples = test.examples.size();
  const std::size_t n = test.examples.size();

  if (spec.kind == TaskKind::Retrieval) {
    Tensor<float> q({n, m.encoder.config().hidden}), d({n, m.encoder.config().hidden});
    for (std::size_t start = 0; start < n; start += kBatch) {
      std::vector<std::vector<std::int32_t>> qs, ds;
      for (std::size_t i = start; i < std::min(n, start + kBatch); ++i) {
        qs.push_back(encode_example(test.examples[i], spec));
        ds.push_back(encode_example(test.examples[i], spec, true));
      }
      const auto pq = pooled(m.encoder, pack(qs), spec.pooling);
      const auto pd = pooled(m.encoder, pack(ds), spec.pooling);
      std::copy(pq.values().begin(), pq.values().end(), q.data() + start * q.cols());
      std::copy(pd.values().begin(), pd.values().end(), d.data() + start * d.cols());
    }
    std::vector<std::size_t> gold(n);
    for (std::size_t i = 0; i < n; ++i) gold[i] = i;
    report.metrics["mrr"] = eval_mrr(cosine_similarity(q, d), gold);
    report.validate();
    return report;
  }

  std::vector<int> preds, golds;
  std::vector<std::vector<int>> tok_preds, tok_golds;
  for (std::size_t start = 0; start < n; start += kBatch) {
    std::vector<const Example*> batch;
    std::vector<std::vector<std::int32_t>> seqs;
    for (std::size_t i = start; i < std::min(n, start + kBatch); ++i) {
      batch.push_back(&test.examples[i]);
      seqs.push_back(encode_example(test.examples[i], spec));
    }
    const Encoded in = pack(seqs);
    const auto hidden = m.encoder.infer(in.ids, in.mask).hidden;
    if (spec.kind == TaskKind::TokenClass) {
      const auto labels = token_labels(batch, in);
      const auto logits = linear(hidden, m.head.weight, &m.head.bias);
      const std::size_t len = in.mask.seq_len();
      for (std::size_t b = 0; b < batch.size(); ++b) {
        std::vector<int> p, g;
        for (std::size_t t = 0; t < len; ++t) {
          const auto label = labels[b * len + t];
          g.push_back(label == kIgnoreLabel ? kUnannotated : label);
          p.push_back(static_cast<int>(argmax(logits.row(b * len + t))));
        }
        tok_preds.push_back(std::move(p));
        tok_golds.push_back(std::move(g));
      }
    } else {
      const auto logits = linear(pool_sequence(hidden, in.mask, spec.pooling), m.head.weight, &m.head.bias);
      for (std::size_t b = 0; b < batch.size(); ++b) {
        preds.push_back(static_cast<int>(argmax(logits.row(b))));
        golds.push_back(batch[b]->label);
      }
    }
  }

  if (spec.kind == TaskKind::TokenClass) {
    const auto scores = eval_token_types(tok_preds, tok_golds, spec.unk_id, top ? *top : top_types(tok_golds));
    report.metrics["overall_f1"] = scores.overall_f1;
    report.metrics["top100_f1"] = scores.top100_f1;
  } else if (spec.kind == TaskKind::PairClass) {
    const auto prf = eval_clone(preds, golds);
    report.metrics["precision"] = prf.precision;
    report.metrics["recall"] = prf.recall;
    report.metrics["f1"] = prf.f1;
    report.metrics["accuracy"] = accuracy(preds, golds);
  } else {
    report.metrics["accuracy"] = accuracy(preds, golds);
    report.metrics["f1_macro"] = f1_macro(preds, golds, spec.n_labels);
  }
  report.validate();
  return report;
}

model::Checkpoint make_task_checkpoint(const TaskModel& m, const training::TrainState& state,
                                       const training::TrainConfig& config) {
  auto ck = training::make_checkpoint(m.encoder, state, config);
  ck.metadata["task"] = m.spec.to_json();
  for (const auto& r : param_refs(m.head, "task_head.")) ck.tensors.push_back({r.name, *r.tensor});
  return ck;
}

TaskModel load_task_model(const model::Checkpoint& ckpt) {
  if (!ckpt.metadata.contains("task")) throw model::CheckpointError("checkpoint has no task metadata");
  TaskSpec spec;
  try {
    spec = TaskSpec::from_json(ckpt.metadata["task"]);
  } catch (const ConfigError& e) {
    throw model::CheckpointError(std::string("task metadata: ") + e.what());
  }
  TaskModel m = make_task_model(model::Encoder<float>(ckpt.config, model::import_params(ckpt)), spec, 0);
  for (auto& r : param_refs(m.head, "task_head.")) {
    const auto* t = ckpt.find(r.name);
    if (!t) throw model::CheckpointError("checkpoint is missing tensor '" + r.name + "'");
    if (t->value.shape() != r.tensor->shape()) throw model::CheckpointError("tensor '" + r.name + "' has wrong shape");
    *r.tensor = t->value;
  }
  return m;
}

}  // namespace codessm::tasks
