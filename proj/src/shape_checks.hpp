#pragma once

#include <string>

#include "leafnet/errors.hpp"
#include "leafnet/kernels.hpp"

namespace leafnet::detail {

inline void require_rank(const Shape& s, std::size_t rank, const char* what) {
  if (s.rank() != rank) {
    throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got " +
                     s.str());
  }
}

template <typename T>
void check_conv_args(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                     const char* what) {
  require_rank(input.shape(), 4, what);
  require_rank(weights.shape(), 4, what);
  const Shape& w = weights.shape();
  if (w[0] != kKernelSize || w[1] != kKernelSize || w[2] != input.shape()[3]) {
    throw ShapeError(std::string(what) + ": weights " + w.str() + " incompatible with input " +
                     input.shape().str());
  }
}

template <typename T>
void check_conv_forward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                        const BasicTensor<T>& bias) {
  check_conv_args(input, weights, "conv2d_forward");
  if (bias.shape() != Shape{weights.shape()[3]}) {
    throw ShapeError("conv2d_forward: bias " + bias.shape().str() + " does not match weights " +
                     weights.shape().str());
  }
}

template <typename T>
void check_conv_backward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                         const BasicTensor<T>& grad_out) {
  check_conv_args(input, weights, "conv2d_backward");
  const Shape& in = input.shape();
  if (grad_out.shape() != Shape{in[0], in[1], in[2], weights.shape()[3]}) {
    throw ShapeError("conv2d_backward: grad_out " + grad_out.shape().str() +
                     " does not match forward output");
  }
}

inline void check_pool_input(const Shape& s) {
  require_rank(s, 4, "maxpool_forward");
  if (s[1] < kPoolSize || s[2] < kPoolSize) {
    throw ShapeError("maxpool_forward: spatial dims of " + s.str() + " must be >= 2");
  }
}

template <typename T>
void check_pool_backward(const ArgmaxMask& mask, const BasicTensor<T>& grad_out) {
  if (grad_out.shape() != mask.output_shape ||
      static_cast<std::int64_t>(mask.index.size()) != grad_out.shape().elements()) {
    throw ShapeError("maxpool_backward: grad_out " + grad_out.shape().str() +
                     " does not match mask " + mask.output_shape.str());
  }
}

template <typename T>
void check_dense_forward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                         const BasicTensor<T>& bias) {
  require_rank(input.shape(), 2, "dense_forward");
  require_rank(weights.shape(), 2, "dense_forward");
  if (weights.shape()[0] != input.shape()[1] || bias.shape() != Shape{weights.shape()[1]}) {
    throw ShapeError("dense_forward: input " + input.shape().str() + ", weights " +
                     weights.shape().str() + ", bias " + bias.shape().str() + " are inconsistent");
  }
}

template <typename T>
void check_dense_backward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                          const BasicTensor<T>& grad_out) {
  require_rank(input.shape(), 2, "dense_backward");
  require_rank(weights.shape(), 2, "dense_backward");
  if (weights.shape()[0] != input.shape()[1] ||
      grad_out.shape() != Shape{input.shape()[0], weights.shape()[1]}) {
    throw ShapeError("dense_backward: input " + input.shape().str() + ", weights " +
                     weights.shape().str() + ", grad_out " + grad_out.shape().str() +
                     " are inconsistent");
  }
}

inline Shape pooled_shape(const Shape& s) {
  return Shape{s[0], s[1] / kPoolSize, s[2] / kPoolSize, s[3]};
}

}  // namespace leafnet::detail
