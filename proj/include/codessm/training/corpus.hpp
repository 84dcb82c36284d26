#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "codessm/training/masking.hpp"

namespace codessm::training {

/// Reads the "text" field of every JSONL record. Blank lines are skipped;
/// a malformed record throws ConfigError naming the line.
std::vector<std::string> read_jsonl_texts(const std::filesystem::path& path, const std::string& field = "text");
void write_jsonl_texts(const std::filesystem::path& path, const std::vector<std::string>& texts);

/// Python-like source files built from templated functions over a small
/// identifier pool. Deterministic in the seed.
std::vector<std::string> synthetic_code_corpus(std::size_t n_docs, std::uint64_t seed);

struct Batch {
  TokenIds ids;
  PadMask mask;
};

/// Fixed-length windows over byte-tokenized documents.
class WindowSampler {
 public:
  /// Throws ConfigError on an empty corpus or seq_len = 0.
  WindowSampler(const std::vector<std::string>& docs, std::size_t seq_len);

  std::size_t seq_len() const noexcept { return seq_len_; }
  std::size_t documents() const noexcept { return docs_.size(); }

  /// Uniform document, uniform offset; documents shorter than seq_len are padded.
  Batch sample(std::size_t batch, Rng& rng) const;
  /// Consecutive non-overlapping windows from the start of each document, in
  /// corpus order, at most max_windows of them.
  std::vector<Batch> sequential(std::size_t batch, std::size_t max_windows) const;

 private:
  std::vector<std::vector<std::int32_t>> docs_;
  std::size_t seq_len_;
};

}  // namespace codessm::training
