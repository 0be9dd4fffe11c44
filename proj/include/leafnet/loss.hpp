#pragma once

#include <span>

#include "leafnet/tensor.hpp"

namespace leafnet {

/// Mean over the batch of -log softmax(logits)[label], via log-sum-exp.
/// Throws LabelError for labels outside [0, K).
template <typename T>
double sparse_ce_loss(const BasicTensor<T>& logits, std::span<const int> labels);

/// (softmax(logits) - onehot(labels)) / N.
template <typename T>
BasicTensor<T> sparse_ce_grad(const BasicTensor<T>& logits, std::span<const int> labels);

/// Index of the largest entry of each row; ties resolve to the lowest index.
template <typename T>
std::vector<int> argmax_rows(const BasicTensor<T>& m);

}  // namespace leafnet
