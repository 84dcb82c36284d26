#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "codessm/tasks/heads.hpp"

namespace codessm::tasks {

enum class TaskKind { Retrieval, SeqClass, PairClass, TokenClass };

std::string to_string(TaskKind k);
TaskKind task_kind_from_string(const std::string& s);

struct TaskSpec {
  TaskKind kind = TaskKind::SeqClass;
  std::size_t n_labels = 2;  // seq_class and pair_class
  std::size_t n_types = 0;   // token_class
  int unk_id = -1;           // token_class
  Pooling pooling = Pooling::Mean;
  std::size_t context_length = 256;

  /// Throws ConfigError when n_labels < 2 or unk_id is not below n_types.
  void validate() const;
  nlohmann::json to_json() const;
  static TaskSpec from_json(const nlohmann::json& j);
};

struct Example {
  std::string text_a;  // query for retrieval, first snippet for pairs
  std::string text_b;  // document for retrieval, second snippet for pairs
  int label = 0;
  std::vector<int> token_types;  // per byte of text_a; kUnannotated elsewhere
};

struct Dataset {
  TaskSpec spec;
  std::vector<Example> examples;
};

/// Deterministic desk-scale stand-ins for the downstream benchmarks:
///   retrieval   description/snippet pairs sharing an injected rare identifier
///   seq_class   four classes by maximum bracket nesting depth
///   pair_class  renamed clones (about 15% of pairs) against distinct functions
///   token_class typed mini-language; uses resolve through distant declarations
/// Throws ConfigError when size < 10.
Dataset generate_synthetic_task(TaskKind kind, std::size_t size, std::uint64_t seed);

/// JSONL with a leading {"spec": ...} record.
void write_dataset(const std::filesystem::path& path, const Dataset& data);
Dataset read_dataset(const std::filesystem::path& path);

}  // namespace codessm::tasks
