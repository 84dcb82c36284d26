#include "codessm/tasks/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace codessm::tasks {

void MetricReport::validate() const {
  for (const auto& [name, v] : metrics) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw NumericError("metric '" + name + "' = " + std::to_string(v) + " outside [0, 1]");
    }
  }
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json j{{"task", task}, {"samples", samples}};
  for (const auto& [name, v] : metrics) j[name] = v;
  return j;
}

double eval_mrr(const Tensor<double>& similarity, const std::vector<std::size_t>& gold) {
  if (similarity.rank() != 2) throw SizeError("similarity must be a Q x D matrix");
  const std::size_t q = similarity.dim(0), d = similarity.dim(1);
  if (gold.size() != q) throw SizeError("expected one gold index per query");
  double total = 0.0;
  for (std::size_t i = 0; i < q; ++i) {
    if (gold[i] >= d) throw SizeError("gold index " + std::to_string(gold[i]) + " out of range");
    const double g = similarity.at(i, gold[i]);
    std::size_t rank = 1;
    for (std::size_t j = 0; j < d; ++j) {
      const double s = similarity.at(i, j);
      if (s > g || (s == g && j < gold[i])) ++rank;
    }
    total += 1.0 / static_cast<double>(rank);
  }
  return q ? total / static_cast<double>(q) : 0.0;
}

namespace {

void check_pair(const std::vector<int>& preds, const std::vector<int>& golds) {
  if (preds.size() != golds.size()) throw SizeError("predictions and golds differ in length");
  if (preds.empty()) throw SizeError("no samples to evaluate");
}

double f1(std::size_t tp, std::size_t fp, std::size_t fn) {
  const double denom = 2.0 * tp + fp + fn;
  return denom > 0 ? 2.0 * tp / denom : 0.0;
}

}  // namespace

double accuracy(const std::vector<int>& preds, const std::vector<int>& golds) {
  check_pair(preds, golds);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hit += preds[i] == golds[i];
  return static_cast<double>(hit) / static_cast<double>(preds.size());
}

double f1_macro(const std::vector<int>& preds, const std::vector<int>& golds, std::size_t n_classes) {
  check_pair(preds, golds);
  if (n_classes == 0) throw SizeError("n_classes must be >= 1");
  std::vector<std::size_t> tp(n_classes), fp(n_classes), fn(n_classes);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto p = preds[i], g = golds[i];
    if (p < 0 || g < 0 || static_cast<std::size_t>(p) >= n_classes || static_cast<std::size_t>(g) >= n_classes) {
      throw SizeError("label outside [0, " + std::to_string(n_classes) + ")");
    }
    if (p == g) {
      ++tp[p];
    } else {
      ++fp[p];
      ++fn[g];
    }
  }
  double total = 0.0;
  for (std::size_t c = 0; c < n_classes; ++c) total += f1(tp[c], fp[c], fn[c]);
  return total / static_cast<double>(n_classes);
}

double eval_classification(const std::vector<int>& preds, const std::vector<int>& golds, ClassificationScheme scheme,
                           std::size_t n_classes) {
  return scheme == ClassificationScheme::Accuracy ? accuracy(preds, golds) : f1_macro(preds, golds, n_classes);
}

PrecisionRecall eval_clone(const std::vector<int>& preds, const std::vector<int>& golds) {
  check_pair(preds, golds);
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if ((preds[i] != 0 && preds[i] != 1) || (golds[i] != 0 && golds[i] != 1)) {
      throw SizeError("clone labels must be 0 or 1");
    }
    tp += preds[i] == 1 && golds[i] == 1;
    fp += preds[i] == 1 && golds[i] == 0;
    fn += preds[i] == 0 && golds[i] == 1;
  }
  PrecisionRecall r;
  r.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  r.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  r.f1 = f1(tp, fp, fn);
  return r;
}

TokenTypeScores eval_token_types(const std::vector<std::vector<int>>& preds,
                                 const std::vector<std::vector<int>>& golds, int unk_id,
                                 const std::set<int>& top) {
  if (preds.size() != golds.size()) throw SizeError("prediction and gold sequence counts differ");
  std::size_t tp = 0, n = 0, tp_top = 0, n_top = 0;
  for (std::size_t s = 0; s < golds.size(); ++s) {
    if (preds[s].size() != golds[s].size()) throw SizeError("sequence " + std::to_string(s) + " is misaligned");
    for (std::size_t t = 0; t < golds[s].size(); ++t) {
      const int g = golds[s][t];
      if (g == kUnannotated) continue;
      const bool correct = preds[s][t] == g && preds[s][t] != unk_id;
      ++n;
      tp += correct;
      if (top.count(g)) {
        ++n_top;
        tp_top += correct;
      }
    }
  }
  // Every annotated position carries a prediction, so each miss is one false
  // positive and one false negative.
  TokenTypeScores r;
  r.overall_f1 = f1(tp, n - tp, n - tp);
  r.top100_f1 = f1(tp_top, n_top - tp_top, n_top - tp_top);
  return r;
}

std::set<int> top_types(const std::vector<std::vector<int>>& golds, std::size_t k) {
  std::map<int, std::size_t> counts;
  for (const auto& seq : golds)
    for (int g : seq)
      if (g != kUnannotated) ++counts[g];
  std::vector<std::pair<int, std::size_t>> order(counts.begin(), counts.end());
  std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::set<int> out;
  for (std::size_t i = 0; i < order.size() && i < k; ++i) out.insert(order[i].first);
  return out;
}

}  // namespace codessm::tasks
