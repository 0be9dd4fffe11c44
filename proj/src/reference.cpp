#include "leafnet/reference.hpp"

#include <cmath>

#include "shape_checks.hpp"

namespace leafnet::reference {

template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                              const BasicTensor<T>& bias) {
  detail::check_conv_forward(input, weights, bias);
  const Shape& s = input.shape();
  const std::int64_t N = s[0], H = s[1], W = s[2], C = s[3], F = weights.shape()[3];
  BasicTensor<T> out(Shape{N, H, W, F});
  for (std::int64_t n = 0; n < N; ++n)
    for (std::int64_t y = 0; y < H; ++y)
      for (std::int64_t x = 0; x < W; ++x)
        for (std::int64_t f = 0; f < F; ++f) {
          T acc = bias[f];
          for (std::int64_t dy = 0; dy < 3; ++dy)
            for (std::int64_t dx = 0; dx < 3; ++dx) {
              const std::int64_t sy = y + dy - 1, sx = x + dx - 1;
              if (sy < 0 || sy >= H || sx < 0 || sx >= W) continue;
              for (std::int64_t c = 0; c < C; ++c) acc += input.at(n, sy, sx, c) * weights.at(dy, dx, c, f);
            }
          out.at(n, y, x, f) = acc;
        }
  return out;
}

template <typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                             const BasicTensor<T>& grad_out) {
  detail::check_conv_backward(input, weights, grad_out);
  const Shape& s = input.shape();
  const std::int64_t N = s[0], H = s[1], W = s[2], C = s[3], F = weights.shape()[3];
  ConvGrads<T> g{BasicTensor<T>(s), BasicTensor<T>(weights.shape()), BasicTensor<T>(Shape{F})};
  for (std::int64_t n = 0; n < N; ++n)
    for (std::int64_t y = 0; y < H; ++y)
      for (std::int64_t x = 0; x < W; ++x)
        for (std::int64_t f = 0; f < F; ++f) {
          const T go = grad_out.at(n, y, x, f);
          g.bias[f] += go;
          for (std::int64_t dy = 0; dy < 3; ++dy)
            for (std::int64_t dx = 0; dx < 3; ++dx) {
              const std::int64_t sy = y + dy - 1, sx = x + dx - 1;
              if (sy < 0 || sy >= H || sx < 0 || sx >= W) continue;
              for (std::int64_t c = 0; c < C; ++c) {
                g.weights.at(dy, dx, c, f) += input.at(n, sy, sx, c) * go;
                g.input.at(n, sy, sx, c) += weights.at(dy, dx, c, f) * go;
              }
            }
        }
  return g;
}

template <typename T>
PoolResult<T> maxpool_forward(const BasicTensor<T>& input) {
  detail::check_pool_input(input.shape());
  const Shape& s = input.shape();
  const Shape os = detail::pooled_shape(s);
  PoolResult<T> r{BasicTensor<T>(os), ArgmaxMask{s, os, std::vector<std::int64_t>(os.elements())}};
  for (std::int64_t n = 0; n < os[0]; ++n)
    for (std::int64_t oy = 0; oy < os[1]; ++oy)
      for (std::int64_t ox = 0; ox < os[2]; ++ox)
        for (std::int64_t c = 0; c < os[3]; ++c) {
          std::int64_t by = 2 * oy, bx = 2 * ox;
          for (std::int64_t wy = 0; wy < 2; ++wy)
            for (std::int64_t wx = 0; wx < 2; ++wx)
              if (input.at(n, 2 * oy + wy, 2 * ox + wx, c) > input.at(n, by, bx, c)) {
                by = 2 * oy + wy;
                bx = 2 * ox + wx;
              }
          const std::int64_t o = ((n * os[1] + oy) * os[2] + ox) * os[3] + c;
          r.output[o] = input.at(n, by, bx, c);
          r.mask.index[o] = ((n * s[1] + by) * s[2] + bx) * s[3] + c;
        }
  return r;
}

template <typename T>
BasicTensor<T> maxpool_backward(const ArgmaxMask& mask, const BasicTensor<T>& grad_out) {
  detail::check_pool_backward(mask, grad_out);
  BasicTensor<T> g(mask.input_shape);
  for (std::size_t i = 0; i < mask.index.size(); ++i) g[mask.index[i]] += grad_out[i];
  return g;
}

template <typename T>
BasicTensor<T> dense_forward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                             const BasicTensor<T>& bias) {
  detail::check_dense_forward(input, weights, bias);
  const std::int64_t N = input.shape()[0], K = input.shape()[1], U = weights.shape()[1];
  BasicTensor<T> out(Shape{N, U});
  for (std::int64_t n = 0; n < N; ++n)
    for (std::int64_t u = 0; u < U; ++u) {
      T acc = bias[u];
      for (std::int64_t k = 0; k < K; ++k) acc += input[n * K + k] * weights[k * U + u];
      out[n * U + u] = acc;
    }
  return out;
}

template <typename T>
DenseGrads<T> dense_backward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                             const BasicTensor<T>& grad_out) {
  detail::check_dense_backward(input, weights, grad_out);
  const std::int64_t N = input.shape()[0], K = input.shape()[1], U = weights.shape()[1];
  DenseGrads<T> g{BasicTensor<T>(input.shape()), BasicTensor<T>(weights.shape()),
                  BasicTensor<T>(Shape{U})};
  for (std::int64_t n = 0; n < N; ++n)
    for (std::int64_t u = 0; u < U; ++u) {
      const T go = grad_out[n * U + u];
      g.bias[u] += go;
      for (std::int64_t k = 0; k < K; ++k) {
        g.weights[k * U + u] += input[n * K + k] * go;
        g.input[n * K + k] += weights[k * U + u] * go;
      }
    }
  return g;
}

template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& logits) {
  detail::require_rank(logits.shape(), 2, "softmax");
  if (!logits.all_finite()) throw NumericError("softmax: non-finite logits");
  const std::int64_t N = logits.shape()[0], K = logits.shape()[1];
  BasicTensor<T> out(logits.shape());
  for (std::int64_t n = 0; n < N; ++n) {
    T m = logits[n * K];
    for (std::int64_t j = 1; j < K; ++j) m = std::max(m, logits[n * K + j]);
    T sum = 0;
    for (std::int64_t j = 0; j < K; ++j) sum += std::exp(logits[n * K + j] - m);
    for (std::int64_t j = 0; j < K; ++j) out[n * K + j] = std::exp(logits[n * K + j] - m) / sum;
  }
  return out;
}

#define LEAFNET_INSTANTIATE(T)                                                                   \
  template BasicTensor<T> conv2d_forward(const BasicTensor<T>&, const BasicTensor<T>&,          \
                                         const BasicTensor<T>&);                                 \
  template ConvGrads<T> conv2d_backward(const BasicTensor<T>&, const BasicTensor<T>&,           \
                                        const BasicTensor<T>&);                                  \
  template PoolResult<T> maxpool_forward(const BasicTensor<T>&);                                 \
  template BasicTensor<T> maxpool_backward(const ArgmaxMask&, const BasicTensor<T>&);            \
  template BasicTensor<T> dense_forward(const BasicTensor<T>&, const BasicTensor<T>&,           \
                                        const BasicTensor<T>&);                                  \
  template DenseGrads<T> dense_backward(const BasicTensor<T>&, const BasicTensor<T>&,           \
                                        const BasicTensor<T>&);                                  \
  template BasicTensor<T> softmax(const BasicTensor<T>&);

LEAFNET_INSTANTIATE(float)
LEAFNET_INSTANTIATE(double)
#undef LEAFNET_INSTANTIATE

}  // namespace leafnet::reference
