#include "leafnet/tensor.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "leafnet/errors.hpp"

namespace leafnet {

Shape::Shape(std::initializer_list<std::int64_t> dims) : Shape(std::vector<std::int64_t>(dims)) {}

Shape::Shape(std::vector<std::int64_t> dims) : dims_(std::move(dims)) {
  if (dims_.empty() || dims_.size() > 4) {
    throw ShapeError("shape rank must be between 1 and 4, got " + std::to_string(dims_.size()));
  }
  std::int64_t count = 1;
  for (const auto d : dims_) {
    if (d < 1) throw ShapeError("shape " + str() + " has a non-positive dimension");
    if (count > std::numeric_limits<std::int64_t>::max() / d) {
      throw ShapeError("shape " + str() + " overflows a 64-bit element count");
    }
    count *= d;
  }
  elements_ = count;
}

std::string Shape::str() const {
  std::ostringstream out;
  out << '(';
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (i) out << ", ";
    out << dims_[i];
  }
  out << ')';
  return out.str();
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, T fill)
    : shape_(std::move(shape)), data_(static_cast<std::size_t>(shape_.elements()), fill) {}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, std::vector<T> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (static_cast<std::int64_t>(data_.size()) != shape_.elements()) {
    throw ShapeError("data length " + std::to_string(data_.size()) + " does not match shape " +
                     shape_.str());
  }
}

template <typename T>
BasicTensor<T> BasicTensor<T>::reshaped(Shape shape) const& {
  return BasicTensor(std::move(shape), data_);
}

template <typename T>
BasicTensor<T> BasicTensor<T>::reshaped(Shape shape) && {
  return BasicTensor(std::move(shape), std::move(data_));
}

template <typename T>
void BasicTensor<T>::fill(T value) {
  std::fill(data_.begin(), data_.end(), value);
}

template <typename T>
bool BasicTensor<T>::all_finite() const {
  for (const T v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

template <typename T>
BasicTensor<T> glorot_uniform_init(std::int64_t fan_in, std::int64_t fan_out, const Shape& shape,
                                   Rng& rng) {
  if (fan_in < 1 || fan_out < 1) throw ArgumentError("glorot_uniform_init: fans must be >= 1");
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  BasicTensor<T> out(shape);
  for (auto& v : out.values()) {
    T s = static_cast<T>(rng_uniform(rng, -limit, limit));
    // Narrowing to T may round onto the bound; keep the interval open.
    while (std::abs(static_cast<double>(s)) >= limit) s = std::nextafter(s, T(0));
    v = s;
  }
  return out;
}

template <typename T>
bool approx_equal(const BasicTensor<T>& a, const BasicTensor<T>& b, double rtol, double atol) {
  if (!(a.shape() == b.shape())) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double av = a[i];
    const double bv = b[i];
    if (!(std::abs(av - bv) <= atol + rtol * std::abs(bv))) return false;
  }
  return true;
}

template class BasicTensor<float>;
template class BasicTensor<double>;
template BasicTensor<float> glorot_uniform_init(std::int64_t, std::int64_t, const Shape&, Rng&);
template BasicTensor<double> glorot_uniform_init(std::int64_t, std::int64_t, const Shape&, Rng&);
template bool approx_equal(const BasicTensor<float>&, const BasicTensor<float>&, double, double);
template bool approx_equal(const BasicTensor<double>&, const BasicTensor<double>&, double, double);

}  // namespace leafnet
