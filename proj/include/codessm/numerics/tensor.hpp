#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "codessm/numerics/errors.hpp"
#include "codessm/numerics/memory.hpp"

namespace codessm {

template <typename T>
using TrackedVector = std::vector<T, memory::TrackingAllocator<T>>;

using Shape = std::vector<std::size_t>;

inline std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

inline std::size_t shape_product(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

/// Dense row-major tensor. Storage is tracked (see memory.hpp).
///
/// A default-constructed tensor is empty (rank 0, no data) and is used as a
/// placeholder for optional parameters. Any constructed tensor has every
/// dimension >= 1.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(Shape shape, T fill = T(0)) : shape_(std::move(shape)) {
    for (auto d : shape_) {
      if (d == 0) throw SizeError("tensor dimension must be >= 1, got shape " + shape_string(shape_));
    }
    data_.assign(shape_product(shape_), fill);
  }

  static Tensor from(Shape shape, std::span<const T> values) {
    Tensor t(std::move(shape));
    if (values.size() != t.size()) {
      throw SizeError("tensor data length " + std::to_string(values.size()) + " does not match shape " +
                      shape_string(t.shape_));
    }
    std::copy(values.begin(), values.end(), t.data_.begin());
    return t;
  }
  static Tensor from(Shape shape, std::initializer_list<T> values) {
    return from(std::move(shape), std::span<const T>(values.begin(), values.size()));
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  /// Size of the last dimension; every tensor is viewable as rows() x cols().
  std::size_t cols() const noexcept { return shape_.empty() ? 0 : shape_.back(); }
  std::size_t rows() const noexcept { return cols() ? size() / cols() : 0; }

  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  std::span<T> values() noexcept { return {data_.data(), data_.size()}; }
  std::span<const T> values() const noexcept { return {data_.data(), data_.size()}; }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  T& at(std::size_t r, std::size_t c) noexcept { return data_[r * cols() + c]; }
  const T& at(std::size_t r, std::size_t c) const noexcept { return data_[r * cols() + c]; }

  std::span<T> row(std::size_t r) noexcept { return {data_.data() + r * cols(), cols()}; }
  std::span<const T> row(std::size_t r) const noexcept { return {data_.data() + r * cols(), cols()}; }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  /// Same data, new shape with equal element count.
  Tensor reshaped(Shape shape) const {
    if (shape_product(shape) != size()) {
      throw SizeError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
    }
    Tensor t = *this;
    t.shape_ = std::move(shape);
    return t;
  }

  bool same_shape(const Tensor& o) const noexcept { return shape_ == o.shape_; }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(shape_);
    for (std::size_t i = 0; i < size(); ++i) out[i] = static_cast<U>(data_[i]);
    return out;
  }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && std::equal(a.data_.begin(), a.data_.end(), b.data_.begin());
  }

 private:
  Shape shape_;
  TrackedVector<T> data_;
};

using RealTensor = Tensor<float>;
using RealTensor64 = Tensor<double>;

inline void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (a != b) throw SizeError(std::string(what) + ": shape " + shape_string(a) + " vs " + shape_string(b));
}

}  // namespace codessm
