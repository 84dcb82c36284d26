#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "codessm/numerics/tensor.hpp"

namespace codessm::tasks {

/// Task-tagged evaluation results. Every metric lies in [0, 1].
struct MetricReport {
  std::string task;
  std::map<std::string, double> metrics;
  std::size_t samples = 0;

  /// Throws NumericError if a metric is outside [0, 1] or not finite.
  void validate() const;
  nlohmann::json to_json() const;
};

/// Mean of 1/rank of the gold column per row. Ties rank the lower index first.
double eval_mrr(const Tensor<double>& similarity, const std::vector<std::size_t>& gold);

double accuracy(const std::vector<int>& preds, const std::vector<int>& golds);
/// Unweighted mean of per-class F1 over classes 0..n_classes-1. A class with
/// no support and no predictions scores 0.
double f1_macro(const std::vector<int>& preds, const std::vector<int>& golds, std::size_t n_classes);

enum class ClassificationScheme { Accuracy, F1Macro };
double eval_classification(const std::vector<int>& preds, const std::vector<int>& golds, ClassificationScheme scheme,
                           std::size_t n_classes);

struct PrecisionRecall {
  double precision = 0.0;  // 0 when nothing is predicted positive
  double recall = 0.0;     // 0 when there are no gold positives
  double f1 = 0.0;
};

/// Positive-class precision, recall and F1 for 0/1 labels.
PrecisionRecall eval_clone(const std::vector<int>& preds, const std::vector<int>& golds);

inline constexpr int kUnannotated = -1;

struct TokenTypeScores {
  double overall_f1 = 0.0;
  double top100_f1 = 0.0;
};

/// Micro-F1 over annotated positions (gold != kUnannotated). A prediction of
/// unk_id is always wrong, also when the gold type is unk_id. top100_f1
/// restricts the gold positions to types in top_types.
TokenTypeScores eval_token_types(const std::vector<std::vector<int>>& preds,
                                 const std::vector<std::vector<int>>& golds, int unk_id,
                                 const std::set<int>& top_types);

/// The (up to) 100 most frequent gold types; ties go to the lower id.
std::set<int> top_types(const std::vector<std::vector<int>>& golds, std::size_t k = 100);

}  // namespace codessm::tasks
