#include "codessm/bench/measure.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "codessm/bench/attention.hpp"
#include "codessm/layers/gated_layer.hpp"
#include "codessm/numerics/memory.hpp"

namespace codessm::bench {

std::string to_string(LayerKind k) { return k == LayerKind::Ssm ? "ssm" : "attention"; }

LayerKind layer_kind_from_string(const std::string& s) {
  if (s == "ssm") return LayerKind::Ssm;
  if (s == "attention") return LayerKind::Attention;
  throw ConfigError("unknown layer kind '" + s + "' (expected ssm or attention)");
}

const BenchRow& BenchReport::find(LayerKind layer, std::size_t length) const {
  for (const auto& r : rows)
    if (r.layer == layer && r.length == length) return r;
  throw SizeError("no " + to_string(layer) + " measurement at L=" + std::to_string(length));
}

double BenchReport::memory_ratio(LayerKind layer, std::size_t long_len, std::size_t short_len) const {
  return static_cast<double>(find(layer, long_len).peak_bytes) / static_cast<double>(find(layer, short_len).peak_bytes);
}

double BenchReport::memory_slope(LayerKind layer) const {
  std::vector<double> xs, ys;
  for (const auto& r : rows) {
    if (r.layer != layer) continue;
    xs.push_back(std::log(static_cast<double>(r.length)));
    ys.push_back(std::log(static_cast<double>(r.peak_bytes)));
  }
  if (xs.size() < 2) throw SizeError("slope needs at least two lengths");
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i] / n;
    my += ys[i] / n;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxy / sxx;
}

std::size_t BenchReport::crossover() const {
  std::vector<std::size_t> lengths;
  for (const auto& r : rows)
    if (r.layer == LayerKind::Ssm) lengths.push_back(r.length);
  std::sort(lengths.begin(), lengths.end());
  std::size_t result = 0;
  for (auto it = lengths.rbegin(); it != lengths.rend(); ++it) {
    if (find(LayerKind::Ssm, *it).samples_per_s < find(LayerKind::Attention, *it).samples_per_s) break;
    result = *it;
  }
  return result;
}

std::string BenchReport::to_csv() const {
  std::ostringstream out;
  out << "layer,L,batch,peak_bytes,ms,samples_per_s\n";
  char buf[64];
  for (const auto& r : rows) {
    out << to_string(r.layer) << ',' << r.length << ',' << r.batch << ',' << r.peak_bytes << ',';
    std::snprintf(buf, sizeof buf, "%.6g,%.6g", r.ms, r.samples_per_s);
    out << buf << '\n';
  }
  return out.str();
}

nlohmann::json BenchReport::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"layer", to_string(r.layer)},
                         {"L", r.length},
                         {"batch", r.batch},
                         {"peak_bytes", r.peak_bytes},
                         {"ms", r.ms},
                         {"samples_per_s", r.samples_per_s}});
  }
  nlohmann::json j{{"rows", rows_json}};
  nlohmann::json derived = nlohmann::json::object();
  for (auto kind : {LayerKind::Ssm, LayerKind::Attention}) {
    std::vector<std::size_t> lengths;
    for (const auto& r : rows)
      if (r.layer == kind) lengths.push_back(r.length);
    if (lengths.size() < 2) continue;
    std::sort(lengths.begin(), lengths.end());
    derived[to_string(kind)] = {{"memory_slope", memory_slope(kind)},
                                {"memory_ratio_longest_to_shortest",
                                 memory_ratio(kind, lengths.back(), lengths.front())}};
  }
  bool both = false;
  for (const auto& r : rows) both |= r.layer == LayerKind::Attention;
  if (both && !derived.empty()) derived["crossover_L"] = crossover();
  j["derived"] = derived;
  return j;
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

BenchReport measure(LayerKind layer, const std::vector<std::size_t>& lengths, const BenchOptions& opts) {
  if (opts.trials == 0 || opts.batch == 0) throw ConfigError("bench needs trials >= 1 and batch >= 1");
  Rng rng(opts.seed);
  layers::GatedLayerParams<float> ssm_params;
  AttentionParams<float> attn_params;
  layers::LayerOptions layer_opts;
  if (layer == LayerKind::Ssm) {
    ssm_params = layers::init_gated_layer<float>(opts.hidden, opts.state_size, false, rng);
  } else {
    attn_params = init_attention<float>(opts.hidden, opts.n_heads, rng);
  }

  BenchReport report;
  for (std::size_t len : lengths) {
    Tensor<float> x({opts.batch, len, opts.hidden});
    for (auto& v : x.values()) v = static_cast<float>(rng.normal());
    const auto mask = layers::PadMask::full(opts.batch, len);
    Rng unused(0);
    auto run = [&] {
      if (layer == LayerKind::Ssm) return layers::layer_forward(ssm_params, layer_opts, x, mask, false, unused);
      return attention_reference_forward(attn_params, x);
    };

    std::vector<double> times;
    std::int64_t peak = 0;
    for (std::size_t t = 0; t <= opts.trials; ++t) {
      const auto base = memory::current_bytes();
      memory::reset_peak();
      const auto start = std::chrono::steady_clock::now();
      auto y = run();
      const auto stop = std::chrono::steady_clock::now();
      peak = std::max(peak, memory::peak_bytes() - base);
      if (t > 0) times.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
    }
    BenchRow row;
    row.layer = layer;
    row.length = len;
    row.batch = opts.batch;
    row.peak_bytes = peak;
    row.ms = median(times);
    row.samples_per_s = 1000.0 * static_cast<double>(opts.batch) / row.ms;
    report.rows.push_back(row);
  }
  return report;
}

BenchReport measure_all(const std::vector<std::size_t>& lengths, const BenchOptions& opts) {
  auto report = measure(LayerKind::Ssm, lengths, opts);
  auto attn = measure(LayerKind::Attention, lengths, opts);
  report.rows.insert(report.rows.end(), attn.rows.begin(), attn.rows.end());
  return report;
}

}  // namespace codessm::bench
