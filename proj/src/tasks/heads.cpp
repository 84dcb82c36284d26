#include "codessm/tasks/heads.hpp"

#include <cmath>

namespace codessm::tasks {

std::string to_string(Pooling p) { return p == Pooling::Mean ? "mean" : "first_token"; }

Pooling pooling_from_string(const std::string& s) {
  if (s == "mean") return Pooling::Mean;
  if (s == "first_token") return Pooling::FirstToken;
  throw ConfigError("unknown pooling '" + s + "' (expected mean or first_token)");
}

namespace {

template <typename T>
void check_hidden(const Tensor<T>& hidden, const PadMask& mask) {
  if (hidden.rank() != 3 || hidden.dim(0) != mask.batch() || hidden.dim(1) != mask.seq_len()) {
    throw SizeError("hidden " + shape_string(hidden.shape()) + " does not match mask");
  }
  for (std::size_t b = 0; b < mask.batch(); ++b) {
    if (mask.valid_length(b) == 0) throw SizeError("sample " + std::to_string(b) + " has no valid position");
  }
}

}  // namespace

template <typename T>
Tensor<T> pool_sequence(const Tensor<T>& hidden, const PadMask& mask, Pooling mode) {
  check_hidden(hidden, mask);
  const std::size_t len = mask.seq_len(), d = hidden.cols();
  Tensor<T> out({mask.batch(), d});
  for (std::size_t b = 0; b < mask.batch(); ++b) {
    const std::size_t n = mode == Pooling::Mean ? mask.valid_length(b) : 1;
    for (std::size_t t = 0; t < n; ++t)
      for (std::size_t k = 0; k < d; ++k) out.at(b, k) += hidden.at(b * len + t, k);
    for (std::size_t k = 0; k < d; ++k) out.at(b, k) /= static_cast<T>(n);
  }
  return out;
}

template <typename T>
Tensor<T> pool_sequence_backward(const Tensor<T>& d_pooled, const PadMask& mask, Pooling mode) {
  const std::size_t len = mask.seq_len(), d = d_pooled.cols();
  Tensor<T> out({mask.batch(), len, d});
  for (std::size_t b = 0; b < mask.batch(); ++b) {
    const std::size_t n = mode == Pooling::Mean ? mask.valid_length(b) : 1;
    for (std::size_t t = 0; t < n; ++t)
      for (std::size_t k = 0; k < d; ++k) out.at(b * len + t, k) = d_pooled.at(b, k) / static_cast<T>(n);
  }
  return out;
}

namespace {

template <typename T>
std::vector<double> row_norms(const Tensor<T>& x, const char* what) {
  std::vector<double> n(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double s = 0;
    for (T v : x.row(r)) s += static_cast<double>(v) * v;
    n[r] = std::sqrt(s);
    if (!(n[r] > 0.0)) throw NumericError(std::string(what) + " row " + std::to_string(r) + " has zero norm");
  }
  return n;
}

}  // namespace

template <typename T>
Tensor<double> cosine_similarity(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.cols() != b.cols()) throw SizeError("cosine similarity needs equal widths");
  const auto na = row_norms(a, "query"), nb = row_norms(b, "document");
  Tensor<double> s({a.rows(), b.rows()});
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double dot = 0;
      for (std::size_t k = 0; k < a.cols(); ++k) dot += static_cast<double>(a.at(i, k)) * b.at(j, k);
      s.at(i, j) = dot / (na[i] * nb[j]);
    }
  return s;
}

template <typename T>
double retrieval_loss(const Tensor<T>& queries, const Tensor<T>& docs, double temperature, Tensor<T>* d_queries,
                      Tensor<T>* d_docs) {
  const std::size_t n = queries.rows(), d = queries.cols();
  if (n < 2) throw SizeError("retrieval loss needs at least two pairs");
  if (docs.rows() != n || docs.cols() != d) throw SizeError("query and document batches differ in shape");
  if (!(temperature > 0.0)) throw ConfigError("temperature must be > 0");
  const auto nq = row_norms(queries, "query"), nd = row_norms(docs, "document");
  const Tensor<double> s = cosine_similarity(queries, docs);

  // dL/dS accumulated from the row-wise and column-wise softmax terms.
  Tensor<double> g({n, n});
  double loss = 0.0;
  for (int dir = 0; dir < 2; ++dir) {
    for (std::size_t i = 0; i < n; ++i) {
      auto logit = [&](std::size_t j) { return (dir == 0 ? s.at(i, j) : s.at(j, i)) / temperature; };
      double mx = logit(0);
      for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, logit(j));
      double z = 0;
      for (std::size_t j = 0; j < n; ++j) z += std::exp(logit(j) - mx);
      const double log_z = mx + std::log(z);
      loss += log_z - logit(i);
      for (std::size_t j = 0; j < n; ++j) {
        const double p = std::exp(logit(j) - log_z) - (i == j ? 1.0 : 0.0);
        const double grad = p / (temperature * 2.0 * static_cast<double>(n));
        if (dir == 0) {
          g.at(i, j) += grad;
        } else {
          g.at(j, i) += grad;
        }
      }
    }
  }
  loss /= 2.0 * static_cast<double>(n);

  // S_ij = <q_i, d_j> / (|q_i| |d_j|)
  if (d_queries) {
    *d_queries = Tensor<T>(queries.shape());
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < d; ++k) {
          const double dq = docs.at(j, k) / (nq[i] * nd[j]) - s.at(i, j) * queries.at(i, k) / (nq[i] * nq[i]);
          d_queries->at(i, k) += static_cast<T>(g.at(i, j) * dq);
        }
  }
  if (d_docs) {
    *d_docs = Tensor<T>(docs.shape());
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < d; ++k) {
          const double dd = queries.at(i, k) / (nq[i] * nd[j]) - s.at(i, j) * docs.at(j, k) / (nd[j] * nd[j]);
          d_docs->at(j, k) += static_cast<T>(g.at(i, j) * dd);
        }
  }
  return loss;
}

template <typename T>
ClassifierHead<T> init_classifier(std::size_t n_out, std::size_t d, Rng& rng) {
  ClassifierHead<T> h{Tensor<T>({n_out, d}), Tensor<T>({n_out})};
  for (auto& v : h.weight.values()) v = static_cast<T>(rng.truncated_normal(0.02));
  return h;
}

#define CODESSM_INSTANTIATE(T)                                                                            \
  template Tensor<T> pool_sequence<T>(const Tensor<T>&, const PadMask&, Pooling);                         \
  template Tensor<T> pool_sequence_backward<T>(const Tensor<T>&, const PadMask&, Pooling);                \
  template Tensor<double> cosine_similarity<T>(const Tensor<T>&, const Tensor<T>&);                       \
  template double retrieval_loss<T>(const Tensor<T>&, const Tensor<T>&, double, Tensor<T>*, Tensor<T>*); \
  template ClassifierHead<T> init_classifier<T>(std::size_t, std::size_t, Rng&);
CODESSM_INSTANTIATE(float)
CODESSM_INSTANTIATE(double)
#undef CODESSM_INSTANTIATE

}  // namespace codessm::tasks
