#pragma once

// Serial, loop-for-loop versions of the layer kernels. They follow the
// defining formulas directly and are slow on purpose.

#include "leafnet/kernels.hpp"

namespace leafnet::reference {

template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                              const BasicTensor<T>& bias);

template <typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                             const BasicTensor<T>& grad_out);

template <typename T>
PoolResult<T> maxpool_forward(const BasicTensor<T>& input);

template <typename T>
BasicTensor<T> maxpool_backward(const ArgmaxMask& mask, const BasicTensor<T>& grad_out);

template <typename T>
BasicTensor<T> dense_forward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                             const BasicTensor<T>& bias);

template <typename T>
DenseGrads<T> dense_backward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                             const BasicTensor<T>& grad_out);

template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& logits);

}  // namespace leafnet::reference
