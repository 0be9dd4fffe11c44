#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "leafnet/rng.hpp"

namespace leafnet {

/// Dimensions of a dense row-major tensor. Rank 1 to 4; for rank 4 the
/// order is (batch, height, width, channels).
class Shape {
 public:
  Shape() = default;
  Shape(std::initializer_list<std::int64_t> dims);
  explicit Shape(std::vector<std::int64_t> dims);

  std::size_t rank() const { return dims_.size(); }
  std::int64_t operator[](std::size_t i) const { return dims_[i]; }
  const std::vector<std::int64_t>& dims() const { return dims_; }

  /// Product of dims. Validated against 64-bit overflow at construction.
  std::int64_t elements() const { return elements_; }

  std::string str() const;

  friend bool operator==(const Shape& a, const Shape& b) { return a.dims_ == b.dims_; }

 private:
  std::vector<std::int64_t> dims_;
  std::int64_t elements_ = 0;
};

template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;
  explicit BasicTensor(Shape shape, T fill = T(0));
  BasicTensor(Shape shape, std::vector<T> data);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  /// Rank-4 (n, y, x, c) accessor.
  T& at(std::int64_t n, std::int64_t y, std::int64_t x, std::int64_t c) {
    return data_[offset(n, y, x, c)];
  }
  const T& at(std::int64_t n, std::int64_t y, std::int64_t x, std::int64_t c) const {
    return data_[offset(n, y, x, c)];
  }

  /// Same data under a new shape with an equal element count.
  BasicTensor reshaped(Shape shape) const&;
  BasicTensor reshaped(Shape shape) &&;

  void fill(T value);

  template <typename U>
  BasicTensor<U> cast() const {
    return BasicTensor<U>(shape_, std::vector<U>(data_.begin(), data_.end()));
  }

  bool all_finite() const;

 private:
  std::size_t offset(std::int64_t n, std::int64_t y, std::int64_t x, std::int64_t c) const {
    return static_cast<std::size_t>(((n * shape_[1] + y) * shape_[2] + x) * shape_[3] + c);
  }

  Shape shape_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;
using Tensor64 = BasicTensor<double>;

template <typename T>
BasicTensor<T> tensor_create(const Shape& shape, T fill) {
  return BasicTensor<T>(shape, fill);
}

/// Entries drawn i.i.d. from uniform(-L, L), L = sqrt(6 / (fan_in + fan_out)).
template <typename T>
BasicTensor<T> glorot_uniform_init(std::int64_t fan_in, std::int64_t fan_out, const Shape& shape,
                                   Rng& rng);

/// True iff shapes match and |a_i - b_i| <= atol + rtol * |b_i| everywhere.
template <typename T>
bool approx_equal(const BasicTensor<T>& a, const BasicTensor<T>& b, double rtol, double atol);

}  // namespace leafnet
