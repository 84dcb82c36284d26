#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace codessm::bench {

enum class LayerKind { Ssm, Attention };

std::string to_string(LayerKind k);
LayerKind layer_kind_from_string(const std::string& s);

struct BenchOptions {
  std::size_t hidden = 64;
  std::size_t state_size = 16;
  std::size_t n_heads = 4;
  std::size_t batch = 4;
  std::size_t trials = 3;  // timed trials after one untimed warm-up
  std::uint64_t seed = 0;
};

struct BenchRow {
  LayerKind layer = LayerKind::Ssm;
  std::size_t length = 0;
  std::size_t batch = 0;
  std::int64_t peak_bytes = 0;  // tracked allocations above the input, during forward
  double ms = 0.0;              // median over trials
  double samples_per_s = 0.0;
};

struct BenchReport {
  std::vector<BenchRow> rows;

  const BenchRow& find(LayerKind layer, std::size_t length) const;
  /// peak_bytes(long) / peak_bytes(short).
  double memory_ratio(LayerKind layer, std::size_t long_len, std::size_t short_len) const;
  /// Least-squares slope of log(peak_bytes) against log(L).
  double memory_slope(LayerKind layer) const;
  /// Smallest measured L from which SSM samples/s >= attention samples/s at
  /// every longer length; 0 when there is none.
  std::size_t crossover() const;

  std::string to_csv() const;
  nlohmann::json to_json() const;
};

/// Runs one inference forward pass per trial for each length.
BenchReport measure(LayerKind layer, const std::vector<std::size_t>& lengths, const BenchOptions& opts);
/// Both layer kinds over the same lengths.
BenchReport measure_all(const std::vector<std::size_t>& lengths, const BenchOptions& opts);

}  // namespace codessm::bench
