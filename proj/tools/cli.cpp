#include "cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "codessm/bench/measure.hpp"
#include "codessm/model/checkpoint.hpp"
#include "codessm/training/gradcheck.hpp"
#include "codessm/ssm/spectrum.hpp"
#include "codessm/tasks/finetune.hpp"
#include "codessm/training/trainer.hpp"

namespace codessm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// A check command ran to completion but its result is above threshold.
class CheckFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_key(const std::string& key) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    parts.push_back(key.substr(start, dot == std::string::npos ? std::string::npos : dot - start));
    if (parts.back().empty()) throw ConfigError("malformed config key '" + key + "'");
    if (dot == std::string::npos) return parts;
    start = dot + 1;
  }
}

void set_path(json& base, const std::string& key, json value) {
  const auto parts = split_key(key);
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) value = json{{*it, std::move(value)}};
  merge_strict(base, value);
}

template <typename F>
auto typed(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ConfigError(e.what());
  }
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config file '" + path + "' is not valid JSON");
  return j;
}

std::optional<std::uint64_t> env_seed() {
  const char* raw = std::getenv("CODESSM_SEED");
  if (raw == nullptr) return std::nullopt;
  const std::string s(raw);
  std::uint64_t v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || end != s.data() + s.size()) {
    throw ConfigError("CODESSM_SEED must be an unsigned integer, got '" + s + "'");
  }
  return v;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
}

struct Common {
  std::string config_path;
  std::vector<std::string> sets;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  bool force = false;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("-c,--config", c.config_path, "JSON file merged over the defaults");
  sub->add_option("--set", c.sets, "Override one value, e.g. --set train.lr=3e-4 (repeatable)")
      ->expected(1)
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  sub->add_option("-o,--out", c.out_dir, "Output directory")->default_val("runs/" + sub->get_name());
  sub->add_option("--seed", c.seed, "Seed; takes precedence over the config and CODESSM_SEED");
  sub->add_flag("--force", c.force, "Allow writing into a non-empty output directory");
}

/// Output directory, created and snapshotted on first use.
class Output {
 public:
  Output(std::string command, fs::path dir, bool force)
      : command_(std::move(command)), dir_(std::move(dir)), force_(force) {}

  void open(const json& resolved) {
    if (fs::exists(dir_)) {
      if (!fs::is_directory(dir_)) throw UsageError("output path '" + dir_.string() + "' is not a directory");
      if (!fs::is_empty(dir_) && !force_) {
        throw UsageError("output directory '" + dir_.string() + "' is not empty; pass --force to overwrite");
      }
    }
    fs::create_directories(dir_);
    write_text(dir_ / "config.json", json{{"command", command_}, {"config", resolved}}.dump(2) + "\n");
  }

  fs::path path(const std::string& name) const { return dir_ / name; }

 private:
  std::string command_;
  fs::path dir_;
  bool force_;
};

json resolve(json defaults, const Common& c, const std::vector<std::pair<std::string, json>>& flags,
             const std::string& seed_key) {
  if (!c.config_path.empty()) merge_strict(defaults, read_json_file(c.config_path));
  for (const auto& s : c.sets) apply_override(defaults, s);
  for (const auto& [key, value] : flags) set_path(defaults, key, value);
  if (const auto s = env_seed()) set_path(defaults, seed_key, *s);
  if (c.seed) set_path(defaults, seed_key, *c.seed);
  return defaults;
}

void clamp_warmup(json& train) {
  typed([&] {
    if (train.at("warmup_steps").get<std::uint64_t>() > train.at("total_steps").get<std::uint64_t>()) {
      train["warmup_steps"] = train.at("total_steps");
    }
    return 0;
  });
}

training::MetricSink jsonl_sink(std::ofstream& file) {
  return [&file](const training::MetricRecord& r) {
    file << r.to_json().dump() << '\n';
    file.flush();
  };
}

// pretrain

json pretrain_defaults() {
  return {{"model", model::EncoderConfig::desk().to_json()},
          {"train", training::TrainConfig::desk().to_json()},
          {"data", {{"corpus", ""}, {"synthetic_docs", 2000}, {"synthetic_seed", 1}}}};
}

int cmd_pretrain(json cfg, Output& o, std::ostream& out) {
  clamp_warmup(cfg.at("train"));
  const auto mc = typed([&] { return model::EncoderConfig::from_json(cfg.at("model")); });
  const auto tc = typed([&] { return training::TrainConfig::from_json(cfg.at("train")); });
  mc.validate();
  tc.validate();
  const auto& data = cfg.at("data");
  const auto corpus = typed([&] { return data.at("corpus").get<std::string>(); });
  const auto n_docs = typed([&] { return data.at("synthetic_docs").get<std::size_t>(); });
  const auto data_seed = typed([&] { return data.at("synthetic_seed").get<std::uint64_t>(); });

  const auto docs = corpus.empty() ? training::synthetic_code_corpus(n_docs, data_seed)
                                   : training::read_jsonl_texts(corpus);
  const training::WindowSampler sampler(docs, tc.seq_len);
  auto enc = model::Encoder<float>::initialize(mc, tc.seed);

  o.open(cfg);
  std::ofstream metrics(o.path("metrics.jsonl"), std::ios::trunc);
  training::TrainState state;
  const auto result = training::train_mlm(enc, sampler, tc, state, jsonl_sink(metrics));
  model::save_checkpoint(o.path("checkpoint.cssm"), training::make_checkpoint(enc, state, tc));

  json summary{{"checkpoint", o.path("checkpoint.cssm").string()}, {"steps", state.step}};
  if (!result.losses.empty()) summary["final_loss"] = result.losses.back();
  out << summary.dump() << '\n';
  return kExitOk;
}

// finetune

json finetune_defaults() {
  auto t = training::TrainConfig::desk();
  t.schedule = training::ScheduleKind::Linear;
  t.total_steps = 300;
  t.warmup_steps = 30;
  t.log_interval = 50;
  return {{"init", ""},
          {"model", model::EncoderConfig::desk().to_json()},
          {"task",
           {{"kind", "seq_class"},
            {"train", ""},
            {"test", ""},
            {"synthetic_train", 400},
            {"synthetic_test", 100},
            {"synthetic_seed", 1},
            {"context_length", 256}}},
          {"train", t.to_json()}};
}

std::pair<tasks::Dataset, tasks::Dataset> load_task_data(const json& task) {
  return typed([&] {
    const auto kind = tasks::task_kind_from_string(task.at("kind").get<std::string>());
    const auto seed = task.at("synthetic_seed").get<std::uint64_t>();
    const auto train_path = task.at("train").get<std::string>();
    const auto test_path = task.at("test").get<std::string>();
    auto train = train_path.empty()
                     ? tasks::generate_synthetic_task(kind, task.at("synthetic_train").get<std::size_t>(), seed)
                     : tasks::read_dataset(train_path);
    auto test = test_path.empty()
                    ? tasks::generate_synthetic_task(kind, task.at("synthetic_test").get<std::size_t>(), seed + 1)
                    : tasks::read_dataset(test_path);
    if (train.spec.kind != kind || test.spec.kind != kind) {
      throw ConfigError("dataset task kind does not match task.kind '" + tasks::to_string(kind) + "'");
    }
    train.spec.context_length = test.spec.context_length = task.at("context_length").get<std::size_t>();
    train.spec.validate();
    return std::pair{std::move(train), std::move(test)};
  });
}

int cmd_finetune(json cfg, Output& o, std::ostream& out) {
  clamp_warmup(cfg.at("train"));
  const auto tc = typed([&] { return training::TrainConfig::from_json(cfg.at("train")); });
  tc.validate();
  const auto init = typed([&] { return cfg.at("init").get<std::string>(); });
  auto mc = typed([&] { return model::EncoderConfig::from_json(cfg.at("model")); });
  mc.validate();
  auto [train, test] = load_task_data(cfg.at("task"));

  auto encoder = [&] {
    if (init.empty()) return model::Encoder<float>::initialize(mc, tc.seed);
    const auto ckpt = model::load_checkpoint(init);
    return model::Encoder<float>(ckpt.config, model::import_params(ckpt));
  }();
  auto task_model = tasks::make_task_model(std::move(encoder), train.spec, tc.seed);

  o.open(cfg);
  std::ofstream metrics(o.path("metrics.jsonl"), std::ios::trunc);
  training::TrainState state;
  tasks::finetune(task_model, train, tc, state, jsonl_sink(metrics));
  model::save_checkpoint(o.path("checkpoint.cssm"), tasks::make_task_checkpoint(task_model, state, tc));
  const auto report = tasks::evaluate_task(task_model, test);
  write_text(o.path("report.json"), report.to_json().dump(2) + "\n");
  out << report.to_json().dump() << '\n';
  return kExitOk;
}

// eval

json eval_defaults() {
  return {{"checkpoint", ""}, {"data", ""},          {"seq_len", 64},     {"synthetic_size", 200},
          {"synthetic_seed", 999}, {"mask_prob", 0.15}, {"batch_size", 8}, {"max_windows", 320},
          {"seed", 7}};
}

int cmd_eval(json cfg, Output& o, std::ostream& out) {
  const auto path = typed([&] { return cfg.at("checkpoint").get<std::string>(); });
  if (path.empty()) throw ConfigError("checkpoint is required (--checkpoint)");
  const auto data = typed([&] { return cfg.at("data").get<std::string>(); });
  const auto size = typed([&] { return cfg.at("synthetic_size").get<std::size_t>(); });
  const auto data_seed = typed([&] { return cfg.at("synthetic_seed").get<std::uint64_t>(); });

  const auto ckpt = model::load_checkpoint(path);
  tasks::MetricReport report;
  json extra = json::object();
  if (ckpt.metadata.contains("task")) {
    const auto task_model = tasks::load_task_model(ckpt);
    auto test = data.empty() ? tasks::generate_synthetic_task(task_model.spec.kind, size, data_seed)
                             : tasks::read_dataset(data);
    test.spec.context_length = task_model.spec.context_length;
    report = tasks::evaluate_task(task_model, test);
  } else {
    const auto seq_len = typed([&] { return cfg.at("seq_len").get<std::size_t>(); });
    const auto batch = typed([&] { return cfg.at("batch_size").get<std::size_t>(); });
    const auto windows = typed([&] { return cfg.at("max_windows").get<std::size_t>(); });
    const auto mask_prob = typed([&] { return cfg.at("mask_prob").get<double>(); });
    const auto seed = typed([&] { return cfg.at("seed").get<std::uint64_t>(); });
    const model::Encoder<float> enc(ckpt.config, model::import_params(ckpt));
    const auto docs = data.empty() ? training::synthetic_code_corpus(size, data_seed) : training::read_jsonl_texts(data);
    const auto batches = training::WindowSampler(docs, seq_len).sequential(batch, windows);
    const auto e = training::evaluate_mlm(enc, batches, mask_prob, seed);
    report.task = "mlm";
    if (e.accuracy) report.metrics["masked_accuracy"] = *e.accuracy;
    report.samples = e.targets;
    extra["loss"] = e.loss;
  }
  report.validate();
  o.open(cfg);
  auto j = report.to_json();
  write_text(o.path("report.json"), j.dump(2) + "\n");
  j.update(extra);
  out << j.dump() << '\n';
  return kExitOk;
}

// bench

json bench_defaults() {
  return {{"lengths", {256, 512, 1024, 2048}},
          {"layers", {"ssm", "attention"}},
          {"batch", 4},
          {"trials", 3},
          {"hidden", 64},
          {"state_size", 16},
          {"heads", 4},
          {"seed", 0}};
}

int cmd_bench(json cfg, Output& o, std::ostream& out) {
  bench::BenchOptions opts;
  std::vector<std::size_t> lengths;
  std::vector<bench::LayerKind> kinds;
  typed([&] {
    lengths = cfg.at("lengths").get<std::vector<std::size_t>>();
    for (const auto& s : cfg.at("layers").get<std::vector<std::string>>()) kinds.push_back(bench::layer_kind_from_string(s));
    opts.batch = cfg.at("batch").get<std::size_t>();
    opts.trials = cfg.at("trials").get<std::size_t>();
    opts.hidden = cfg.at("hidden").get<std::size_t>();
    opts.state_size = cfg.at("state_size").get<std::size_t>();
    opts.n_heads = cfg.at("heads").get<std::size_t>();
    opts.seed = cfg.at("seed").get<std::uint64_t>();
    return 0;
  });
  if (lengths.empty() || kinds.empty()) throw ConfigError("bench needs at least one length and one layer kind");
  for (auto len : lengths)
    if (len == 0) throw ConfigError("bench lengths must be positive");
  if (opts.trials == 0 || opts.batch == 0) throw ConfigError("bench needs trials >= 1 and batch >= 1");
  if (opts.n_heads == 0 || opts.hidden % opts.n_heads != 0) throw ConfigError("hidden must be divisible by heads");

  o.open(cfg);
  bench::BenchReport report;
  for (auto kind : kinds) {
    auto part = bench::measure(kind, lengths, opts);
    report.rows.insert(report.rows.end(), part.rows.begin(), part.rows.end());
  }
  write_text(o.path("bench.csv"), report.to_csv());
  write_text(o.path("bench.json"), report.to_json().dump(2) + "\n");
  out << report.to_csv();
  return kExitOk;
}

// spectrum

json spectrum_defaults() {
  return {{"checkpoint", ""}, {"model", model::EncoderConfig::desk().to_json()}, {"kernel_len", 10},
          {"n_freq", 0},      {"seed", 0}};
}

int cmd_spectrum(json cfg, Output& o, std::ostream& out) {
  const auto path = typed([&] { return cfg.at("checkpoint").get<std::string>(); });
  const auto kernel_len = typed([&] { return cfg.at("kernel_len").get<std::size_t>(); });
  auto n_freq = typed([&] { return cfg.at("n_freq").get<std::size_t>(); });
  const auto seed = typed([&] { return cfg.at("seed").get<std::uint64_t>(); });
  if (kernel_len == 0) throw ConfigError("kernel_len must be >= 1");
  if (n_freq == 0) n_freq = kernel_len;
  if (n_freq < 2) throw ConfigError("n_freq must be >= 2");

  model::EncoderConfig mc;
  model::EncoderParams<float> params;
  if (path.empty()) {
    mc = typed([&] { return model::EncoderConfig::from_json(cfg.at("model")); });
    params = model::init_params<float>(mc, seed);
  } else {
    const auto ckpt = model::load_checkpoint(path);
    mc = ckpt.config;
    params = model::import_params(ckpt);
  }
  if (mc.variant == model::Variant::CodeF) throw ConfigError("the codef variant has no SSM kernels");
  const auto opts = mc.layer_options().kernel;

  std::vector<ssm::SpectrumReport> reports;
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    for (const auto& [kernel, direction] :
         {std::pair{&params.layers[i].fwd_kernel, "forward"}, std::pair{&params.layers[i].bwd_kernel, "backward"}}) {
      auto r = ssm::spectrum(*kernel, kernel_len, n_freq, opts);
      r.layer_index = static_cast<int>(i);
      r.direction = direction;
      reports.push_back(std::move(r));
    }
  }
  std::ostringstream csv;
  ssm::write_spectrum_csv(csv, reports);
  o.open(cfg);
  write_text(o.path("spectrum.csv"), csv.str());
  out << csv.str();
  return kExitOk;
}

// gradcheck

json gradcheck_defaults() {
  return {{"preset", "desk"},        {"batch", 2},       {"length", 16},         {"entries_per_tensor", 6},
          {"threshold", 1e-3},       {"ssm_threshold", 1e-4}, {"seed", 0}};
}

model::EncoderConfig gradcheck_preset(const std::string& name) {
  if (name == "desk") return model::EncoderConfig::desk();
  if (name == "small") {
    auto c = model::EncoderConfig::desk();
    c.hidden = 8;
    c.state_size = 4;
    return c;
  }
  throw ConfigError("unknown gradcheck preset '" + name + "' (expected desk or small)");
}

json result_json(const GradCheckResult& r) {
  return {{"max_rel_error", r.max_rel_error}, {"worst_param", r.worst_param}, {"worst_index", r.worst_index},
          {"analytic", r.worst_analytic},     {"numeric", r.worst_numeric},   {"entries", r.entries_checked}};
}

int cmd_gradcheck(json cfg, Output& o, std::ostream& out) {
  const auto mc = gradcheck_preset(typed([&] { return cfg.at("preset").get<std::string>(); }));
  const auto batch = typed([&] { return cfg.at("batch").get<std::size_t>(); });
  const auto length = typed([&] { return cfg.at("length").get<std::size_t>(); });
  const auto entries = typed([&] { return cfg.at("entries_per_tensor").get<std::size_t>(); });
  const auto threshold = typed([&] { return cfg.at("threshold").get<double>(); });
  const auto ssm_threshold = typed([&] { return cfg.at("ssm_threshold").get<double>(); });
  const auto seed = typed([&] { return cfg.at("seed").get<std::uint64_t>(); });
  if (batch == 0 || length == 0) throw ConfigError("gradcheck batch and length must be positive");

  o.open(cfg);
  const auto ssm = training::ssm_path_gradcheck(mc.state_size, length, 3, seed);
  const auto enc = training::encoder_gradcheck(mc, batch, length, entries, seed);
  const json report{{"ssm", result_json(ssm)}, {"encoder", result_json(enc)}};
  write_text(o.path("gradcheck.json"), report.dump(2) + "\n");
  out << "max_rel_error " << enc.max_rel_error << '\n' << report.dump() << '\n';
  if (!(ssm.max_rel_error < ssm_threshold)) {
    throw CheckFailed("ssm path relative error " + std::to_string(ssm.max_rel_error) + " at " + ssm.worst_param);
  }
  if (!(enc.max_rel_error < threshold)) {
    throw CheckFailed("encoder relative error " + std::to_string(enc.max_rel_error) + " at " + enc.worst_param);
  }
  return kExitOk;
}

// gen-data

json gen_data_defaults() {
  return {{"corpus_docs", 2000},
          {"tasks", {"retrieval", "seq_class", "pair_class", "token_class"}},
          {"train_size", 400},
          {"test_size", 100},
          {"seed", 1}};
}

int cmd_gen_data(json cfg, Output& o, std::ostream& out) {
  const auto n_docs = typed([&] { return cfg.at("corpus_docs").get<std::size_t>(); });
  const auto train_size = typed([&] { return cfg.at("train_size").get<std::size_t>(); });
  const auto test_size = typed([&] { return cfg.at("test_size").get<std::size_t>(); });
  const auto seed = typed([&] { return cfg.at("seed").get<std::uint64_t>(); });
  std::vector<tasks::TaskKind> kinds;
  for (const auto& s : typed([&] { return cfg.at("tasks").get<std::vector<std::string>>(); })) {
    kinds.push_back(tasks::task_kind_from_string(s));
  }
  if (train_size < 10 || test_size < 10) throw ConfigError("train_size and test_size must be >= 10");

  o.open(cfg);
  json written = json::array();
  if (n_docs > 0) {
    training::write_jsonl_texts(o.path("corpus.jsonl"), training::synthetic_code_corpus(n_docs, seed));
    written.push_back(o.path("corpus.jsonl").string());
  }
  for (auto kind : kinds) {
    const auto name = tasks::to_string(kind);
    tasks::write_dataset(o.path(name + ".train.jsonl"), tasks::generate_synthetic_task(kind, train_size, seed));
    tasks::write_dataset(o.path(name + ".test.jsonl"), tasks::generate_synthetic_task(kind, test_size, seed + 1));
    written.push_back(o.path(name + ".train.jsonl").string());
    written.push_back(o.path(name + ".test.jsonl").string());
  }
  out << json{{"files", written}}.dump() << '\n';
  return kExitOk;
}

int fail(std::ostream& err, int code, const std::string& kind, const std::string& message) {
  err << json{{"error", kind}, {"exit", code}, {"message", message}}.dump(-1, ' ', false,
                                                                         json::error_handler_t::replace)
      << '\n';
  return code;
}

}  // namespace

void merge_strict(json& base, const json& patch, const std::string& where) {
  if (!patch.is_object()) {
    throw ConfigError((where.empty() ? std::string("config document") : "config key '" + where + "'") +
                      " must be an object");
  }
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string key = where.empty() ? it.key() : where + "." + it.key();
    if (!base.is_object() || !base.contains(it.key())) throw ConfigError("unknown config key '" + key + "'");
    json& slot = base[it.key()];
    if (slot.is_object()) {
      merge_strict(slot, it.value(), key);
    } else {
      slot = it.value();
    }
  }
}

void apply_override(json& base, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  set_path(base, assignment.substr(0, eq), std::move(value));
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"CodeSSM encoder: pretraining, fine-tuning, evaluation and analysis", "codessm"};
  app.require_subcommand(1);

  struct Spec {
    CLI::App* app;
    Common common;
    json (*defaults)();
    int (*body)(json, Output&, std::ostream&);
    std::string seed_key;
  };
  std::vector<Spec> specs;
  specs.reserve(7);
  auto add = [&](const std::string& name, const std::string& help, json (*defaults)(), auto body,
                 const std::string& seed_key) -> Spec& {
    specs.push_back({app.add_subcommand(name, help), {}, defaults, body, seed_key});
    add_common(specs.back().app, specs.back().common);
    return specs.back();
  };

  std::optional<std::uint64_t> steps, ft_steps;
  std::string ft_init, ft_task, eval_ckpt, eval_data, spec_ckpt;
  std::optional<std::size_t> kernel_len, bench_batch, bench_trials;
  std::vector<std::size_t> bench_lengths;
  std::string preset;

  auto& pretrain = add("pretrain", "Masked-language-model pretraining; writes a checkpoint and metrics JSONL",
                       pretrain_defaults, cmd_pretrain, "train.seed");
  pretrain.app->add_option("--steps", steps, "Number of optimizer steps");
  auto& finetune = add("finetune", "Fine-tune an encoder on a task; writes a task checkpoint and metric report",
                       finetune_defaults, cmd_finetune, "train.seed");
  finetune.app->add_option("--init", ft_init, "Pretrained checkpoint");
  finetune.app->add_option("--task", ft_task, "retrieval|seq_class|pair_class|token_class");
  finetune.app->add_option("--steps", ft_steps, "Number of optimizer steps");
  auto& eval = add("eval", "Evaluate a pretrain (masked accuracy) or task checkpoint", eval_defaults, cmd_eval, "seed");
  eval.app->add_option("--checkpoint", eval_ckpt, "Checkpoint to evaluate");
  eval.app->add_option("--data", eval_data, "Corpus or task dataset JSONL (synthetic when omitted)");
  auto& bench = add("bench", "Memory and throughput of the SSM layer against reference attention", bench_defaults,
                    cmd_bench, "seed");
  bench.app->add_option("--lengths", bench_lengths, "Sequence lengths");
  bench.app->add_option("--batch", bench_batch, "Batch size");
  bench.app->add_option("--trials", bench_trials, "Timed trials per length");
  auto& spectrum = add("spectrum", "Per-layer forward/backward kernel magnitude and phase CSV", spectrum_defaults,
                       cmd_spectrum, "seed");
  spectrum.app->add_option("--checkpoint", spec_ckpt, "Checkpoint (freshly initialized model when omitted)");
  spectrum.app->add_option("--kernel-len", kernel_len, "Kernel length");
  auto& gradcheck = add("gradcheck", "Finite-difference check of the SSM path and the full encoder",
                        gradcheck_defaults, cmd_gradcheck, "seed");
  gradcheck.app->add_option("--preset", preset, "desk|small");
  add("gen-data", "Write synthetic corpus and task datasets as JSONL", gen_data_defaults, cmd_gen_data, "seed");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    const auto subs = app.get_subcommands();
    out << (subs.empty() ? app.help() : subs.front()->help());
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return fail(err, kExitUsage, "usage", e.what());
  }

  for (auto& s : specs) {
    if (!s.app->parsed()) continue;
    std::vector<std::pair<std::string, json>> flags;
    if (s.app == pretrain.app && steps) flags.emplace_back("train.total_steps", *steps);
    if (s.app == finetune.app) {
      if (!ft_init.empty()) flags.emplace_back("init", ft_init);
      if (!ft_task.empty()) flags.emplace_back("task.kind", ft_task);
      if (ft_steps) flags.emplace_back("train.total_steps", *ft_steps);
    }
    if (s.app == eval.app) {
      if (!eval_ckpt.empty()) flags.emplace_back("checkpoint", eval_ckpt);
      if (!eval_data.empty()) flags.emplace_back("data", eval_data);
    }
    if (s.app == bench.app) {
      if (!bench_lengths.empty()) flags.emplace_back("lengths", bench_lengths);
      if (bench_batch) flags.emplace_back("batch", *bench_batch);
      if (bench_trials) flags.emplace_back("trials", *bench_trials);
    }
    if (s.app == spectrum.app) {
      if (!spec_ckpt.empty()) flags.emplace_back("checkpoint", spec_ckpt);
      if (kernel_len) flags.emplace_back("kernel_len", *kernel_len);
    }
    if (s.app == gradcheck.app && !preset.empty()) flags.emplace_back("preset", preset);

    try {
      const json cfg = resolve(s.defaults(), s.common, flags, s.seed_key);
      Output o(s.app->get_name(), s.common.out_dir, s.common.force);
      return s.body(cfg, o, out);
    } catch (const UsageError& e) {
      return fail(err, kExitUsage, "usage", e.what());
    } catch (const ConfigError& e) {
      return fail(err, kExitConfig, "config", e.what());
    } catch (const json::exception& e) {
      return fail(err, kExitConfig, "config", e.what());
    } catch (const CheckFailed& e) {
      return fail(err, kExitRuntime, "check_failed", e.what());
    } catch (const training::NonFiniteLoss& e) {
      return fail(err, kExitRuntime, "non_finite", e.what());
    } catch (const model::CheckpointError& e) {
      return fail(err, kExitRuntime, "checkpoint", e.what());
    } catch (const std::exception& e) {
      return fail(err, kExitRuntime, "runtime", e.what());
    }
  }
  return fail(err, kExitUsage, "usage", "no command given");
}

}  // namespace codessm::cli
