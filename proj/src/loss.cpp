#include "leafnet/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "leafnet/errors.hpp"
#include "leafnet/kernels.hpp"

namespace leafnet {
namespace {

template <typename T>
void check_labels(const BasicTensor<T>& logits, std::span<const int> labels) {
  if (logits.shape().rank() != 2) throw ShapeError("loss: logits must be (N, K), got " + logits.shape().str());
  const std::int64_t N = logits.shape()[0], K = logits.shape()[1];
  if (static_cast<std::int64_t>(labels.size()) != N) {
    throw ShapeError("loss: " + std::to_string(labels.size()) + " labels for " + std::to_string(N) + " rows");
  }
  for (const int l : labels) {
    if (l < 0 || l >= K) throw LabelError("label " + std::to_string(l) + " outside [0, " + std::to_string(K) + ")");
  }
}

}  // namespace

template <typename T>
double sparse_ce_loss(const BasicTensor<T>& logits, std::span<const int> labels) {
  check_labels(logits, labels);
  if (!logits.all_finite()) throw NumericError("loss: non-finite logits");
  const std::int64_t N = logits.shape()[0], K = logits.shape()[1];
  double total = 0.0;
  for (std::int64_t n = 0; n < N; ++n) {
    const T* z = logits.data() + n * K;
    const double m = *std::max_element(z, z + K);
    double sum = 0.0;
    for (std::int64_t j = 0; j < K; ++j) sum += std::exp(static_cast<double>(z[j]) - m);
    total += m + std::log(sum) - static_cast<double>(z[labels[n]]);
  }
  return total / static_cast<double>(N);
}

template <typename T>
BasicTensor<T> sparse_ce_grad(const BasicTensor<T>& logits, std::span<const int> labels) {
  check_labels(logits, labels);
  const std::int64_t N = logits.shape()[0], K = logits.shape()[1];
  BasicTensor<T> g = kernels::softmax(logits);
  const T inv_n = T(1) / static_cast<T>(N);
  for (std::int64_t n = 0; n < N; ++n) {
    g[n * K + labels[n]] -= T(1);
    for (std::int64_t j = 0; j < K; ++j) g[n * K + j] *= inv_n;
  }
  return g;
}

template <typename T>
std::vector<int> argmax_rows(const BasicTensor<T>& m) {
  if (m.shape().rank() != 2) throw ShapeError("argmax_rows: expected a matrix, got " + m.shape().str());
  const std::int64_t N = m.shape()[0], K = m.shape()[1];
  std::vector<int> out(static_cast<std::size_t>(N));
  for (std::int64_t n = 0; n < N; ++n) {
    const T* row = m.data() + n * K;
    out[n] = static_cast<int>(std::max_element(row, row + K) - row);
  }
  return out;
}

template double sparse_ce_loss(const BasicTensor<float>&, std::span<const int>);
template double sparse_ce_loss(const BasicTensor<double>&, std::span<const int>);
template BasicTensor<float> sparse_ce_grad(const BasicTensor<float>&, std::span<const int>);
template BasicTensor<double> sparse_ce_grad(const BasicTensor<double>&, std::span<const int>);
template std::vector<int> argmax_rows(const BasicTensor<float>&);
template std::vector<int> argmax_rows(const BasicTensor<double>&);

}  // namespace leafnet
