#pragma once

#include <cstddef>
#include <vector>

#include "codessm/numerics/tensor.hpp"

namespace codessm {

inline constexpr double kLayerNormEps = 1e-5;

// ---- activations -------------------------------------------------------

/// x * Phi(x) with the exact Gaussian CDF.
template <typename T>
T gelu(T x);
template <typename T>
T gelu_derivative(T x);

template <typename T>
Tensor<T> gelu(const Tensor<T>& x);

// ---- layer norm --------------------------------------------------------

template <typename T>
struct LayerNormCache {
  Tensor<T> xhat;
  std::vector<T> rstd;
};

/// Normalizes each row over the last dimension, then applies gamma/beta.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, double eps = kLayerNormEps,
                     LayerNormCache<T>* cache = nullptr);

/// Returns dx; accumulates into dgamma/dbeta.
template <typename T>
Tensor<T> layer_norm_backward(const Tensor<T>& dy, const Tensor<T>& gamma, const LayerNormCache<T>& cache,
                              Tensor<T>& dgamma, Tensor<T>& dbeta);

// ---- dense algebra (row-major, viewed as rows() x cols()) --------------

/// C (m x n) = A (m x k) * B^T, with B stored n x k.
template <typename T>
void gemm_nt(const T* a, const T* b, T* c, std::size_t m, std::size_t n, std::size_t k, bool accumulate);
/// C (m x n) = A (m x k) * B (k x n).
template <typename T>
void gemm_nn(const T* a, const T* b, T* c, std::size_t m, std::size_t n, std::size_t k, bool accumulate);
/// C (m x n) = A^T * B, with A stored k x m and B stored k x n.
template <typename T>
void gemm_tn(const T* a, const T* b, T* c, std::size_t m, std::size_t n, std::size_t k, bool accumulate);

/// y = x W^T (+ b). W is out x in; x is viewed as rows x in. Output keeps
/// the leading shape of x with the last dimension replaced by out.
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>* bias);

/// Returns dx; accumulates dW (and db when non-null).
template <typename T>
Tensor<T> linear_backward(const Tensor<T>& dy, const Tensor<T>& x, const Tensor<T>& weight, Tensor<T>& dweight,
                          Tensor<T>* dbias);

// ---- elementwise -------------------------------------------------------

template <typename T>
Tensor<T> hadamard(const Tensor<T>& a, const Tensor<T>& b);

/// a += b
template <typename T>
void add_inplace(Tensor<T>& a, const Tensor<T>& b);

template <typename T>
T max_abs_diff(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
bool all_finite(const Tensor<T>& x);

}  // namespace codessm
