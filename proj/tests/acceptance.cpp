// Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero if any
// criterion fails. argv[1] is a scratch directory (created, then reused).

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "codessm/bench/measure.hpp"
#include "codessm/model/checkpoint.hpp"
#include "codessm/training/gradcheck.hpp"
#include "codessm/ssm/kernel.hpp"
#include "codessm/tasks/metrics.hpp"
#include "codessm/training/trainer.hpp"

using namespace codessm;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("criterion %2d: %s  %s: %s\n", id, pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += !pass;
}

void property(const std::string& name, bool pass, const std::string& detail) {
  std::printf("property    : %s  %s: %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += !pass;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

int cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  if (code != 0) std::printf("  cli %s exited %d: %s", args.front().c_str(), code, err.str().c_str());
  return code;
}

// 1. Convolution against recurrence.

ssm::KernelSpec<double> random_spec(std::size_t n, Rng& rng) {
  if (rng.bernoulli(0.5)) {
    return ssm::init_s4d_lin<double>(n, rng);
  }
  std::vector<cplx> lam(n), b(n), c(n);
  for (std::size_t i = 0; i < n; ++i) {
    lam[i] = {-(0.01 + 2.0 * rng.uniform()), 8.0 * (rng.uniform() - 0.5)};
    b[i] = {rng.normal(), rng.normal()};
    c[i] = {rng.normal(), rng.normal()};
  }
  const double delta = std::exp(std::log(1e-3) + rng.uniform() * (std::log(1.0) - std::log(1e-3)));
  return ssm::KernelSpec<double>::from_complex(lam, b, c, delta);
}

void criterion_1() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(101);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.uniform_int(8), len = 1 + rng.uniform_int(64), d = 1 + rng.uniform_int(4);
    const auto spec = random_spec(n, rng);
    Tensor<double> u({len, d});
    for (auto& v : u.values()) v = rng.normal();
    const auto conv = ssm::ssm_conv(ssm::materialize_kernel(spec, len), u);
    const auto rec = ssm::ssm_recurrence(spec, u);
    for (std::size_t i = 0; i < conv.size(); ++i) worst = std::max(worst, std::abs(conv[i] - rec[i]));
  }
  const double secs = seconds_since(t0);
  report(1, "convolution/recurrence equivalence", worst < 1e-5 && secs < 10.0,
         fmt("100 specs, max |conv - rec| = %.3g (< 1e-5), %.2f s (< 10 s)", worst, secs));
}

// 2. Gradient suite.

void criterion_2() {
  const auto t0 = std::chrono::steady_clock::now();
  double ssm_worst = 0.0;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    ssm_worst = std::max(ssm_worst, training::ssm_path_gradcheck(1 + seed, 16, 3, seed).max_rel_error);
  }
  double e2e_worst = 0.0;
  std::string where;
  for (std::size_t d : {8, 16, 32, 64}) {
    auto c = model::EncoderConfig::desk();
    c.hidden = d;
    const auto r = training::encoder_gradcheck(c, 2, 16, d == 8 ? 0 : 24, d);
    if (r.max_rel_error >= e2e_worst) {
      e2e_worst = r.max_rel_error;
      where = fmt("d=%zu %s", d, r.worst_param.c_str());
    }
  }
  const double secs = seconds_since(t0);
  report(2, "gradient suite", ssm_worst < 1e-4 && e2e_worst < 1e-3 && secs < 120.0,
         fmt("ssm path %.3g (< 1e-4), end-to-end d=8..64 L=16 %.3g at %s (< 1e-3), %.1f s (< 120 s)", ssm_worst,
             e2e_worst, where.c_str(), secs));
}

// 3. Causality of the uni variant, bidirectionality of the base variant.

void criterion_3() {
  auto config = model::EncoderConfig::desk();
  config.hidden = 16;
  config.state_size = 8;
  const std::size_t len = 32;
  Rng rng(303);
  double uni_before = 0.0, base_min_before = 1e300, uni_min_after = 1e300;
  for (int trial = 0; trial < 20; ++trial) {
    layers::TokenIds ids({1, len});
    for (auto& v : ids.values()) v = static_cast<std::int32_t>(5 + rng.uniform_int(256));
    auto ids2 = ids;
    const std::size_t t = 1 + rng.uniform_int(len - 1);
    ids2[t] = static_cast<std::int32_t>(5 + (ids[t] - 5 + 1 + rng.uniform_int(255)) % 256);
    const auto mask = layers::PadMask::full(1, len);
    for (auto variant : {model::Variant::Uni, model::Variant::Base}) {
      config.variant = variant;
      auto params = model::init_params<double>(config, 1000 + trial);
      Rng perturb(2000 + trial);
      for (auto& r : param_refs(params)) {
        if (r.group == DecayGroup::NoDecaySsm) continue;
        for (auto& v : r.tensor->values()) v = r.group == DecayGroup::Decay ? v * 15.0 : v + 0.2 * perturb.normal();
      }
      for (auto& layer : params.layers)
        for (auto* k : {&layer.fwd_kernel, &layer.bwd_kernel}) k->log_delta[0] = std::log(0.2);
      const model::Encoder<double> enc(config, params);
      const auto a = enc.infer(ids, mask).hidden, b = enc.infer(ids2, mask).hidden;
      double before = 0.0, after = 0.0;
      for (std::size_t p = 0; p < len; ++p)
        for (std::size_t c = 0; c < config.hidden; ++c) {
          const double diff = std::abs(a[p * config.hidden + c] - b[p * config.hidden + c]);
          (p < t ? before : after) = std::max(p < t ? before : after, diff);
        }
      if (variant == model::Variant::Uni) {
        uni_before = std::max(uni_before, before);
        uni_min_after = std::min(uni_min_after, after);
      } else {
        base_min_before = std::min(base_min_before, before);
      }
    }
  }
  report(3, "causality/bidirectionality", uni_before < 1e-6 && base_min_before > 1e-6,
         fmt("20 trials; uni max change before t = %.3g (< 1e-6), base min over trials of max change before t = "
             "%.3g (> 1e-6); uni min change at/after t = %.3g",
             uni_before, base_min_before, uni_min_after));
}

// 4, 5, 6, 9, 10 share the pretraining runs.

struct Run {
  fs::path dir;
  std::vector<double> losses;  // per step
  double seconds = 0.0;
  bool ok = false;
};

Run pretrain(const fs::path& dir, const std::vector<std::string>& extra) {
  Run r;
  r.dir = dir;
  std::vector<std::string> args = {"pretrain", "-o", dir.string(), "--force", "--set", "train.log_interval=1"};
  args.insert(args.end(), extra.begin(), extra.end());
  const auto t0 = std::chrono::steady_clock::now();
  r.ok = cli(args) == 0;
  r.seconds = seconds_since(t0);
  if (!r.ok) return r;
  std::istringstream lines(slurp(dir / "metrics.jsonl"));
  std::string line;
  while (std::getline(lines, line)) r.losses.push_back(json::parse(line).at("loss").get<double>());
  return r;
}

model::Encoder<float> load_encoder(const fs::path& ckpt_path) {
  const auto ckpt = model::load_checkpoint(ckpt_path);
  return model::Encoder<float>(ckpt.config, model::import_params(ckpt));
}

const std::vector<std::string>& held_out() {
  static const auto docs = training::synthetic_code_corpus(200, 999);
  return docs;
}

training::MlmEval held_out_eval(const model::Encoder<float>& enc, std::size_t len) {
  const auto batches = training::WindowSampler(held_out(), len).sequential(8, 20000 / len);
  return training::evaluate_mlm(enc, batches, 0.15, 7);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void criteria_4_to_6_and_9(const fs::path& work, fs::path& base_ckpt) {
  const auto base = pretrain(work / "base_a", {});
  if (!base.ok || base.losses.size() != 3000) {
    report(4, "desk MLM accuracy", false, "pretraining run failed");
    report(5, "CodeF ablation direction", false, "pretraining run failed");
    report(6, "length extrapolation", false, "pretraining run failed");
    report(9, "determinism", false, "pretraining run failed");
    return;
  }
  base_ckpt = base.dir / "checkpoint.cssm";
  const auto enc = load_encoder(base_ckpt);
  const auto acc64 = held_out_eval(enc, 64);

  report(4, "desk MLM accuracy", acc64.accuracy && *acc64.accuracy > 0.5 && base.seconds < 1800.0,
         fmt("base, 3000 steps, seed 0: held-out masked accuracy %.4f over %zu targets (> 0.5), training %.0f s "
             "(< 1800 s)",
             acc64.accuracy.value_or(0.0), acc64.targets, base.seconds));

  const std::vector<double> early(base.losses.begin(), base.losses.begin() + 500);
  const std::vector<double> late(base.losses.begin() + 2500, base.losses.end());
  property("loss decreases", median(late) < median(early),
           fmt("median loss steps 2500-3000 %.4f < steps 0-500 %.4f", median(late), median(early)));

  const auto codef = pretrain(work / "codef", {"--set", "model.variant=codef"});
  if (!codef.ok) {
    report(5, "CodeF ablation direction", false, "codef pretraining run failed");
  } else {
    const auto codef_acc = held_out_eval(load_encoder(codef.dir / "checkpoint.cssm"), 64);
    report(5, "CodeF ablation direction", acc64.accuracy.value_or(0) >= codef_acc.accuracy.value_or(1),
           fmt("identical seed/steps/data: base %.4f >= codef %.4f", acc64.accuracy.value_or(0.0),
               codef_acc.accuracy.value_or(0.0)));
  }

  // 6: L=256 on a model trained at L=64.
  bool finite = true;
  for (const auto& batch : training::WindowSampler(held_out(), 256).sequential(8, 16)) {
    const auto out = enc.infer(batch.ids, batch.mask);
    for (float v : out.logits.values()) finite = finite && std::isfinite(v);
  }
  const auto acc256 = held_out_eval(enc, 256);
  const double ratio = acc256.accuracy.value_or(0.0) / acc64.accuracy.value_or(1.0);
  auto pos_config = model::EncoderConfig::desk();
  pos_config.variant = model::Variant::Pos;
  const auto pos = model::Encoder<float>::initialize(pos_config, 0);
  bool length_error = false, in_table_ok = true;
  Rng rng(0);
  auto ids_of = [&](std::size_t len) {
    layers::TokenIds ids({1, len});
    for (auto& v : ids.values()) v = static_cast<std::int32_t>(5 + rng.uniform_int(256));
    return ids;
  };
  try {
    pos.infer(ids_of(pos_config.max_position), layers::PadMask::full(1, pos_config.max_position));
  } catch (const LengthError&) {
    in_table_ok = false;
  }
  try {
    pos.infer(ids_of(pos_config.max_position + 1), layers::PadMask::full(1, pos_config.max_position + 1));
  } catch (const LengthError&) {
    length_error = true;
  }
  report(6, "length extrapolation", finite && ratio >= 0.8 && length_error && in_table_ok,
         fmt("L=256 logits finite: %s; held-out accuracy L=64 %.4f, L=256 %.4f, ratio %.3f (>= 0.8); pos variant "
             "runs at L=%zu: %s, raises a length error at L=%zu: %s",
             finite ? "yes" : "no", acc64.accuracy.value_or(0.0), acc256.accuracy.value_or(0.0), ratio,
             pos_config.max_position, in_table_ok ? "yes" : "no", pos_config.max_position + 1,
             length_error ? "yes" : "no"));

  const auto again = pretrain(work / "base_b", {});
  const auto a = slurp(base.dir / "checkpoint.cssm"), b = again.ok ? slurp(again.dir / "checkpoint.cssm") : "";
  report(9, "determinism", again.ok && !a.empty() && a == b,
         fmt("two 3000-step pretrain runs, identical config and seed: checkpoints %zu and %zu bytes, %s", a.size(),
             b.size(), a == b ? "byte-identical" : "differ"));
}

// 7. Scaling shapes.

void criterion_7() {
  bench::BenchOptions opts;  // d=64, N=16, 4 heads, batch 4
  const auto r = bench::measure_all({512, 2048}, opts);
  const double attn = r.memory_ratio(bench::LayerKind::Attention, 2048, 512);
  const double ssm = r.memory_ratio(bench::LayerKind::Ssm, 2048, 512);
  const double ssm_tp = r.find(bench::LayerKind::Ssm, 2048).samples_per_s;
  const double attn_tp = r.find(bench::LayerKind::Attention, 2048).samples_per_s;
  report(7, "scaling shapes", attn >= 12.0 && ssm <= 6.0 && ssm_tp >= attn_tp,
         fmt("batch 4: attention memory ratio 2048/512 = %.2f (>= 12), ssm = %.2f (<= 6); throughput at L=2048 "
             "ssm %.2f >= attention %.2f samples/s",
             attn, ssm, ssm_tp, attn_tp));

  opts.batch = 1;
  opts.trials = 1;
  const auto s = bench::measure_all({256, 512, 1024, 2048, 4096}, opts);
  const double attn_slope = s.memory_slope(bench::LayerKind::Attention);
  const double ssm_slope = s.memory_slope(bench::LayerKind::Ssm);
  property("memory scaling exponents",
           attn_slope >= 1.7 && attn_slope <= 2.2 && ssm_slope >= 0.9 && ssm_slope <= 1.4,
           fmt("log-log slope over L=256..4096: attention %.3f in [1.7, 2.2], ssm %.3f in [0.9, 1.4]", attn_slope,
               ssm_slope));
  property("throughput crossover", s.crossover() > 0,
           fmt("ssm samples/s >= attention from L=%zu onward", s.crossover()));
}

// 8. Metric oracles, recomputed from full confusion matrices and sorted ranks.

bool metric_oracles(std::string& detail) {
  Rng rng(808);
  const std::size_t n = 1000;
  std::size_t cases = 0;
  for (int trial = 0; trial < 20; ++trial) {
    // MRR: integer scores force ties; sort by (score desc, index asc).
    const std::size_t docs = 2 + rng.uniform_int(60);
    Tensor<double> sim({n, docs});
    for (auto& v : sim.values()) v = static_cast<double>(rng.uniform_int(5));
    std::vector<std::size_t> gold(n);
    for (auto& g : gold) g = rng.uniform_int(docs);
    double mrr = 0.0;
    for (std::size_t q = 0; q < n; ++q) {
      std::vector<std::size_t> order(docs);
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return sim.at(q, a) != sim.at(q, b) ? sim.at(q, a) > sim.at(q, b) : a < b;
      });
      mrr += 1.0 / static_cast<double>(std::find(order.begin(), order.end(), gold[q]) - order.begin() + 1);
    }
    mrr /= static_cast<double>(n);
    if (tasks::eval_mrr(sim, gold) != mrr) {
      detail = fmt("mrr mismatch in trial %d", trial);
      return false;
    }

    // Classification: accuracy and macro-F1 from the confusion matrix.
    const std::size_t classes = 2 + rng.uniform_int(9);
    const double noise = rng.uniform();
    std::vector<int> golds(n), preds(n);
    for (std::size_t i = 0; i < n; ++i) {
      golds[i] = static_cast<int>(rng.uniform_int(classes));
      preds[i] = rng.bernoulli(noise) ? static_cast<int>(rng.uniform_int(classes)) : golds[i];
    }
    std::vector<std::vector<std::size_t>> confusion(classes, std::vector<std::size_t>(classes));
    for (std::size_t i = 0; i < n; ++i) ++confusion[golds[i]][preds[i]];
    std::size_t diag = 0;
    double macro = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      diag += confusion[c][c];
      std::size_t row = 0, col = 0;
      for (std::size_t k = 0; k < classes; ++k) {
        row += confusion[c][k];
        col += confusion[k][c];
      }
      // F1 = 2PR/(P+R) = 2 tp / (row + col) when either is nonzero.
      macro += row + col ? 2.0 * static_cast<double>(confusion[c][c]) / static_cast<double>(row + col) : 0.0;
    }
    macro /= static_cast<double>(classes);
    if (tasks::accuracy(preds, golds) != static_cast<double>(diag) / static_cast<double>(n) ||
        tasks::f1_macro(preds, golds, classes) != macro) {
      detail = fmt("classification mismatch in trial %d", trial);
      return false;
    }

    // Clone detection: 2x2 confusion.
    std::vector<int> cg(n), cp(n);
    const double pos_rate = rng.uniform();
    for (std::size_t i = 0; i < n; ++i) {
      cg[i] = rng.bernoulli(pos_rate);
      cp[i] = rng.bernoulli(noise) ? static_cast<int>(rng.bernoulli(0.5)) : cg[i];
    }
    std::size_t m[2][2] = {{0, 0}, {0, 0}};
    for (std::size_t i = 0; i < n; ++i) ++m[cg[i]][cp[i]];
    const std::size_t predicted = m[0][1] + m[1][1], actual = m[1][0] + m[1][1];
    const double p = predicted ? static_cast<double>(m[1][1]) / static_cast<double>(predicted) : 0.0;
    const double r = actual ? static_cast<double>(m[1][1]) / static_cast<double>(actual) : 0.0;
    const double f = predicted + actual ? 2.0 * static_cast<double>(m[1][1]) / static_cast<double>(predicted + actual)
                                        : 0.0;
    const auto clone = tasks::eval_clone(cp, cg);
    if (clone.precision != p || clone.recall != r || clone.f1 != f) {
      detail = fmt("clone mismatch in trial %d", trial);
      return false;
    }

    // Token types: per-type confusion with UNK predictions counted wrong.
    const int types = 3 + static_cast<int>(rng.uniform_int(8));
    const int unk = static_cast<int>(rng.uniform_int(types));
    std::vector<std::vector<int>> tg, tp;
    std::size_t positions = 0;
    while (positions < n) {
      const std::size_t len = 1 + rng.uniform_int(30);
      std::vector<int> g(len), pr(len);
      for (std::size_t i = 0; i < len; ++i) {
        g[i] = rng.bernoulli(0.1) ? tasks::kUnannotated : static_cast<int>(rng.uniform_int(types));
        pr[i] = rng.bernoulli(noise) ? static_cast<int>(rng.uniform_int(types)) : std::max(g[i], 0);
      }
      positions += len;
      tg.push_back(g);
      tp.push_back(pr);
    }
    std::set<int> top;
    for (int t = 0; t < types; ++t)
      if (rng.bernoulli(0.5)) top.insert(t);
    auto micro = [&](bool top_only) {
      std::vector<std::size_t> hit(types), fp(types), fn(types);
      for (std::size_t s = 0; s < tg.size(); ++s)
        for (std::size_t i = 0; i < tg[s].size(); ++i) {
          const int g = tg[s][i], pr = tp[s][i];
          if (g == tasks::kUnannotated || (top_only && !top.count(g))) continue;
          if (pr == g && pr != unk) {
            ++hit[g];
          } else {
            ++fp[pr];
            ++fn[g];
          }
        }
      const std::size_t h = std::accumulate(hit.begin(), hit.end(), std::size_t{0});
      const std::size_t f_p = std::accumulate(fp.begin(), fp.end(), std::size_t{0});
      const std::size_t f_n = std::accumulate(fn.begin(), fn.end(), std::size_t{0});
      const std::size_t denom = 2 * h + f_p + f_n;
      return denom ? 2.0 * static_cast<double>(h) / static_cast<double>(denom) : 0.0;
    };
    const auto tok = tasks::eval_token_types(tp, tg, unk, top);
    if (tok.overall_f1 != micro(false) || tok.top100_f1 != micro(true)) {
      detail = fmt("token F1 mismatch in trial %d", trial);
      return false;
    }
    cases += 5;
  }
  detail = fmt("%zu random 1000-sample cases (mrr, accuracy, f1-macro, clone p/r/f1, token f1 with UNK) match "
               "exactly",
               cases);
  return true;
}

void criterion_8() {
  std::string detail;
  const bool ok = metric_oracles(detail);
  report(8, "metric oracles", ok, detail);
}

// 10. Spectrum export of the trained model.

void criterion_10(const fs::path& work, const fs::path& ckpt) {
  const auto dir = work / "spectrum";
  std::vector<std::string> args = {"spectrum", "-o", dir.string(), "--force"};
  if (!ckpt.empty()) {
    args.push_back("--checkpoint");
    args.push_back(ckpt.string());
  }
  if (cli(args) != 0) {
    report(10, "spectrum tool", false, "spectrum command failed");
    return;
  }
  std::istringstream csv(slurp(dir / "spectrum.csv"));
  std::string line;
  std::getline(csv, line);
  const bool header = line == "layer_index,direction,freq_index,omega,magnitude,phase_deg";
  std::map<std::pair<int, std::string>, std::vector<std::array<double, 3>>> series;
  while (std::getline(csv, line)) {
    std::istringstream row(line);
    std::string f[6];
    for (auto& s : f) std::getline(row, s, ',');
    series[{std::stoi(f[0]), f[1]}].push_back({std::stod(f[3]), std::stod(f[4]), std::stod(f[5])});
  }

  const auto params = ckpt.empty() ? model::init_params<float>(model::EncoderConfig::desk(), 0)
                                   : model::import_params(model::load_checkpoint(ckpt));
  double sym = 0.0, oracle = 0.0;
  bool shape = header && series.size() == 2 * params.layers.size();
  for (std::size_t layer = 0; layer < params.layers.size(); ++layer) {
    for (const auto& [spec, direction] : {std::pair{&params.layers[layer].fwd_kernel, std::string("forward")},
                                          std::pair{&params.layers[layer].bwd_kernel, std::string("backward")}}) {
      const auto& pts = series[{static_cast<int>(layer), direction}];
      if (pts.size() != 10) {
        shape = false;
        continue;
      }
      for (std::size_t k = 1; k < 10; ++k) {
        sym = std::max(sym, std::abs(pts[k][1] - pts[10 - k][1]));
        const double s = pts[k][2] + pts[10 - k][2];
        sym = std::max(sym, std::min(std::abs(s), std::abs(std::abs(s) - 360.0)));
      }
      // Direct DFT of the materialized kernel.
      const auto kernel = ssm::materialize_kernel(*spec, 10).values;
      for (std::size_t k = 0; k < 10; ++k) {
        std::complex<double> h = 0.0;
        for (std::size_t l = 0; l < 10; ++l) h += kernel[l] * std::polar(1.0, -2.0 * std::numbers::pi * k * l / 10.0);
        oracle = std::max(oracle, std::abs(std::abs(h) - pts[k][1]));
        if (std::abs(h) > 1e-6) {
          const double d = std::arg(h) * 180.0 / std::numbers::pi - pts[k][2];
          oracle = std::max(oracle, std::min(std::abs(d), std::abs(std::abs(d) - 360.0)));
        }
      }
    }
  }
  report(10, "spectrum tool", shape && sym < 1e-9 && oracle < 1e-9,
         fmt("%zu layers x forward/backward, kernel length 10: conjugate-symmetry error %.3g (< 1e-9), direct DFT "
             "error %.3g (< 1e-9)",
             params.layers.size(), sym, oracle));
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "codessm_acceptance";
  fs::create_directories(work);
  const auto t0 = std::chrono::steady_clock::now();

  criterion_1();
  criterion_2();
  criterion_3();
  criterion_7();
  criterion_8();
  fs::path base_ckpt;
  criteria_4_to_6_and_9(work, base_ckpt);
  criterion_10(work, base_ckpt);

  std::printf("acceptance: %d failing line(s), %.0f s total\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
