#include "codessm/numerics/ops.hpp"

#include <Eigen/Core>
#include <cmath>
#include <numbers>

namespace codessm {

template <typename T>
T gelu(T x) {
  return static_cast<T>(0.5) * x * (static_cast<T>(1) + std::erf(x * static_cast<T>(std::numbers::sqrt2 / 2)));
}

template <typename T>
T gelu_derivative(T x) {
  const T cdf = static_cast<T>(0.5) * (static_cast<T>(1) + std::erf(x * static_cast<T>(std::numbers::sqrt2 / 2)));
  const T pdf = std::exp(static_cast<T>(-0.5) * x * x) * static_cast<T>(0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
  return cdf + x * pdf;
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = gelu(x[i]);
  return y;
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, double eps,
                     LayerNormCache<T>* cache) {
  const std::size_t n = x.cols();
  if (gamma.size() != n || beta.size() != n) {
    throw SizeError("layer_norm: gamma/beta length must equal last dimension " + std::to_string(n));
  }
  Tensor<T> y(x.shape());
  if (cache) {
    cache->xhat = Tensor<T>(x.shape());
    cache->rstd.assign(x.rows(), T(0));
  }
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    double mean = 0;
    for (auto v : row) mean += v;
    mean /= static_cast<double>(n);
    double var = 0;
    for (auto v : row) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    const double rstd = 1.0 / std::sqrt(var + eps);
    auto out = y.row(r);
    for (std::size_t c = 0; c < n; ++c) {
      const T xh = static_cast<T>((row[c] - mean) * rstd);
      out[c] = xh * gamma[c] + beta[c];
      if (cache) cache->xhat.at(r, c) = xh;
    }
    if (cache) cache->rstd[r] = static_cast<T>(rstd);
  }
  return y;
}

template <typename T>
Tensor<T> layer_norm_backward(const Tensor<T>& dy, const Tensor<T>& gamma, const LayerNormCache<T>& cache,
                              Tensor<T>& dgamma, Tensor<T>& dbeta) {
  const std::size_t n = dy.cols();
  Tensor<T> dx(dy.shape());
  for (std::size_t r = 0; r < dy.rows(); ++r) {
    const auto g = dy.row(r);
    const auto xh = cache.xhat.row(r);
    T mean_dxh = 0, mean_dxh_xh = 0;
    for (std::size_t c = 0; c < n; ++c) {
      const T dxh = g[c] * gamma[c];
      mean_dxh += dxh;
      mean_dxh_xh += dxh * xh[c];
      dgamma[c] += g[c] * xh[c];
      dbeta[c] += g[c];
    }
    mean_dxh /= static_cast<T>(n);
    mean_dxh_xh /= static_cast<T>(n);
    auto out = dx.row(r);
    for (std::size_t c = 0; c < n; ++c) {
      out[c] = cache.rstd[r] * (g[c] * gamma[c] - mean_dxh - xh[c] * mean_dxh_xh);
    }
  }
  return dx;
}

namespace {
template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using CMap = Eigen::Map<const RowMat<T>>;
template <typename T>
using MMap = Eigen::Map<RowMat<T>>;
}  // namespace

template <typename T>
void gemm_nt(const T* a, const T* b, T* c, std::size_t m, std::size_t n, std::size_t k, bool accumulate) {
  CMap<T> A(a, m, k);
  CMap<T> B(b, n, k);
  MMap<T> C(c, m, n);
  if (accumulate)
    C.noalias() += A * B.transpose();
  else
    C.noalias() = A * B.transpose();
}

template <typename T>
void gemm_nn(const T* a, const T* b, T* c, std::size_t m, std::size_t n, std::size_t k, bool accumulate) {
  CMap<T> A(a, m, k);
  CMap<T> B(b, k, n);
  MMap<T> C(c, m, n);
  if (accumulate)
    C.noalias() += A * B;
  else
    C.noalias() = A * B;
}

template <typename T>
void gemm_tn(const T* a, const T* b, T* c, std::size_t m, std::size_t n, std::size_t k, bool accumulate) {
  CMap<T> A(a, k, m);
  CMap<T> B(b, k, n);
  MMap<T> C(c, m, n);
  if (accumulate)
    C.noalias() += A.transpose() * B;
  else
    C.noalias() = A.transpose() * B;
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>* bias) {
  if (weight.rank() != 2 || weight.dim(1) != x.cols()) {
    throw SizeError("linear: weight " + shape_string(weight.shape()) + " incompatible with input " +
                    shape_string(x.shape()));
  }
  const std::size_t out = weight.dim(0);
  Shape shape = x.shape();
  shape.back() = out;
  Tensor<T> y(shape);
  gemm_nt(x.data(), weight.data(), y.data(), x.rows(), out, x.cols(), false);
  if (bias && !bias->empty()) {
    if (bias->size() != out) throw SizeError("linear: bias length mismatch");
    for (std::size_t r = 0; r < y.rows(); ++r) {
      auto row = y.row(r);
      for (std::size_t c = 0; c < out; ++c) row[c] += (*bias)[c];
    }
  }
  return y;
}

template <typename T>
Tensor<T> linear_backward(const Tensor<T>& dy, const Tensor<T>& x, const Tensor<T>& weight, Tensor<T>& dweight,
                          Tensor<T>* dbias) {
  const std::size_t out = weight.dim(0), in = weight.dim(1), rows = x.rows();
  Tensor<T> dx(x.shape());
  gemm_nn(dy.data(), weight.data(), dx.data(), rows, in, out, false);
  gemm_tn(dy.data(), x.data(), dweight.data(), out, in, rows, true);
  if (dbias && !dbias->empty()) {
    for (std::size_t r = 0; r < rows; ++r) {
      const auto row = dy.row(r);
      for (std::size_t c = 0; c < out; ++c) (*dbias)[c] += row[c];
    }
  }
  return dx;
}

template <typename T>
Tensor<T> hadamard(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "hadamard");
  Tensor<T> y(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) y[i] = a[i] * b[i];
  return y;
}

template <typename T>
void add_inplace(Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "add_inplace");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

template <typename T>
T max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "max_abs_diff");
  T m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

template <typename T>
bool all_finite(const Tensor<T>& x) {
  for (auto v : x.values())
    if (!std::isfinite(v)) return false;
  return true;
}

#define CODESSM_INSTANTIATE(T)                                                                                     \
  template T gelu<T>(T);                                                                                           \
  template T gelu_derivative<T>(T);                                                                                \
  template Tensor<T> gelu<T>(const Tensor<T>&);                                                                    \
  template Tensor<T> layer_norm<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, double, LayerNormCache<T>*); \
  template Tensor<T> layer_norm_backward<T>(const Tensor<T>&, const Tensor<T>&, const LayerNormCache<T>&, Tensor<T>&, \
                                            Tensor<T>&);                                                           \
  template void gemm_nt<T>(const T*, const T*, T*, std::size_t, std::size_t, std::size_t, bool);                  \
  template void gemm_nn<T>(const T*, const T*, T*, std::size_t, std::size_t, std::size_t, bool);                  \
  template void gemm_tn<T>(const T*, const T*, T*, std::size_t, std::size_t, std::size_t, bool);                  \
  template Tensor<T> linear<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>*);                              \
  template Tensor<T> linear_backward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, Tensor<T>&,          \
                                        Tensor<T>*);                                                               \
  template Tensor<T> hadamard<T>(const Tensor<T>&, const Tensor<T>&);                                              \
  template void add_inplace<T>(Tensor<T>&, const Tensor<T>&);                                                      \
  template T max_abs_diff<T>(const Tensor<T>&, const Tensor<T>&);                                                  \
  template bool all_finite<T>(const Tensor<T>&);

CODESSM_INSTANTIATE(float)
CODESSM_INSTANTIATE(double)
#undef CODESSM_INSTANTIATE

}  // namespace codessm
