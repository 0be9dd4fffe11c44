#pragma once

// Layer kernels. Work is split across OpenMP threads by batch sample or by
// output row; every reduction runs in a fixed order, so results are bitwise
// identical for any thread count. The loop-level reference versions live in
// reference.hpp and are used by the tests and the benchmark.

#include <cstdint>
#include <vector>

#include "leafnet/tensor.hpp"

namespace leafnet {

/// Per output cell of a 2x2/stride-2 pooling, the flat index of the winning
/// input element.
struct ArgmaxMask {
  Shape input_shape;
  Shape output_shape;
  std::vector<std::int64_t> index;
};

template <typename T>
struct PoolResult {
  BasicTensor<T> output;
  ArgmaxMask mask;
};

template <typename T>
struct ConvGrads {
  BasicTensor<T> input;  // empty when not requested
  BasicTensor<T> weights;
  BasicTensor<T> bias;
};

template <typename T>
struct DenseGrads {
  BasicTensor<T> input;
  BasicTensor<T> weights;
  BasicTensor<T> bias;
};

inline constexpr std::int64_t kKernelSize = 3;
inline constexpr std::int64_t kPoolSize = 2;

namespace kernels {

/// 3x3 stride-1 convolution with one pixel of zero padding.
/// input (N,H,W,C), weights (3,3,C,F), bias (F) -> (N,H,W,F). No activation.
template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                              const BasicTensor<T>& bias);

template <typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                             const BasicTensor<T>& grad_out, bool want_input_grad = true);

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x);

/// Gradient passes where x > 0; zero at x == 0.
template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& x, const BasicTensor<T>& grad_out);

/// 2x2 stride-2 max pooling. Odd trailing rows/columns are dropped; ties go
/// to the first element in row-major window order.
template <typename T>
PoolResult<T> maxpool_forward(const BasicTensor<T>& input);

template <typename T>
BasicTensor<T> maxpool_backward(const ArgmaxMask& mask, const BasicTensor<T>& grad_out);

/// input (N,K), weights (K,U), bias (U) -> (N,U).
template <typename T>
BasicTensor<T> dense_forward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                             const BasicTensor<T>& bias);

template <typename T>
DenseGrads<T> dense_backward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                             const BasicTensor<T>& grad_out, bool want_input_grad = true);

/// Row-wise softmax with max subtraction. Throws NumericError on non-finite
/// logits.
template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& logits);

}  // namespace kernels
}  // namespace leafnet
