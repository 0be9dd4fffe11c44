#include "leafnet/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "shape_checks.hpp"

namespace leafnet::kernels {
namespace {

// Eight independent partial sums combined in a fixed tree, so the compiler
// can vectorize without reassociation flags and the result never depends on
// scheduling.
template <typename T>
T dot(const T* a, const T* b, std::int64_t n) {
  T acc[8] = {};
  std::int64_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (int l = 0; l < 8; ++l) acc[l] += a[i + l] * b[i + l];
  }
  for (; i < n; ++i) acc[0] += a[i] * b[i];
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

template <typename T>
void axpy(T a, const T* x, T* y, std::int64_t n) {
  for (std::int64_t i = 0; i < n; ++i) y[i] += a * x[i];
}

// Gathers the zero-padded 3x3xC neighbourhood of (n, y, x) in (dy, dx, c)
// order, which is also the row order of the (3,3,C,F) weight matrix.
template <typename T>
void gather_patch(const T* in, std::int64_t H, std::int64_t W, std::int64_t C, std::int64_t y,
                  std::int64_t x, T* patch) {
  for (std::int64_t dy = 0; dy < kKernelSize; ++dy) {
    const std::int64_t sy = y + dy - 1;
    for (std::int64_t dx = 0; dx < kKernelSize; ++dx) {
      const std::int64_t sx = x + dx - 1;
      T* dst = patch + (dy * kKernelSize + dx) * C;
      if (sy < 0 || sy >= H || sx < 0 || sx >= W) {
        std::fill(dst, dst + C, T(0));
      } else {
        const T* src = in + (sy * W + sx) * C;
        std::copy(src, src + C, dst);
      }
    }
  }
}

template <typename T>
void scatter_patch(const T* patch, std::int64_t H, std::int64_t W, std::int64_t C, std::int64_t y,
                   std::int64_t x, T* out) {
  for (std::int64_t dy = 0; dy < kKernelSize; ++dy) {
    const std::int64_t sy = y + dy - 1;
    if (sy < 0 || sy >= H) continue;
    for (std::int64_t dx = 0; dx < kKernelSize; ++dx) {
      const std::int64_t sx = x + dx - 1;
      if (sx < 0 || sx >= W) continue;
      const T* src = patch + (dy * kKernelSize + dx) * C;
      T* dst = out + (sy * W + sx) * C;
      for (std::int64_t c = 0; c < C; ++c) dst[c] += src[c];
    }
  }
}

}  // namespace

template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                              const BasicTensor<T>& bias) {
  detail::check_conv_forward(input, weights, bias);
  const std::int64_t N = input.shape()[0], H = input.shape()[1], W = input.shape()[2],
                     C = input.shape()[3], F = weights.shape()[3];
  const std::int64_t K = kKernelSize * kKernelSize * C;
  BasicTensor<T> out(Shape{N, H, W, F});
  const T* in = input.data();
  const T* w = weights.data();
  const T* b = bias.data();
  T* o = out.data();

#pragma omp parallel
  {
    std::vector<T> patch(static_cast<std::size_t>(K));
#pragma omp for schedule(static)
    for (std::int64_t row = 0; row < N * H; ++row) {
      const std::int64_t n = row / H, y = row % H;
      const T* in_n = in + n * H * W * C;
      for (std::int64_t x = 0; x < W; ++x) {
        gather_patch(in_n, H, W, C, y, x, patch.data());
        T* dst = o + ((n * H + y) * W + x) * F;
        std::copy(b, b + F, dst);
        for (std::int64_t k = 0; k < K; ++k) {
          const T pk = patch[static_cast<std::size_t>(k)];
          if (pk != T(0)) axpy(pk, w + k * F, dst, F);
        }
      }
    }
  }
  return out;
}

template <typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                             const BasicTensor<T>& grad_out, bool want_input_grad) {
  detail::check_conv_backward(input, weights, grad_out);
  const std::int64_t N = input.shape()[0], H = input.shape()[1], W = input.shape()[2],
                     C = input.shape()[3], F = weights.shape()[3];
  const std::int64_t K = kKernelSize * kKernelSize * C;

  // Transposed weights (F, K) so the input-gradient patch is an axpy over K.
  std::vector<T> wt(static_cast<std::size_t>(K * F));
  for (std::int64_t k = 0; k < K; ++k)
    for (std::int64_t f = 0; f < F; ++f) wt[f * K + k] = weights[k * F + f];

  // Per-sample partial sums, reduced afterwards in sample order.
  std::vector<T> partial_w(static_cast<std::size_t>(N * K * F), T(0));
  std::vector<T> partial_b(static_cast<std::size_t>(N * F), T(0));

  ConvGrads<T> grads;
  if (want_input_grad) grads.input = BasicTensor<T>(input.shape());
  const T* in = input.data();
  const T* g = grad_out.data();

#pragma omp parallel
  {
    std::vector<T> patch(static_cast<std::size_t>(K));
    std::vector<T> gpatch(static_cast<std::size_t>(K));
#pragma omp for schedule(static)
    for (std::int64_t n = 0; n < N; ++n) {
      const T* in_n = in + n * H * W * C;
      T* pw = partial_w.data() + n * K * F;
      T* pb = partial_b.data() + n * F;
      T* gin_n = want_input_grad ? grads.input.data() + n * H * W * C : nullptr;
      for (std::int64_t y = 0; y < H; ++y) {
        for (std::int64_t x = 0; x < W; ++x) {
          const T* go = g + ((n * H + y) * W + x) * F;
          for (std::int64_t f = 0; f < F; ++f) pb[f] += go[f];
          gather_patch(in_n, H, W, C, y, x, patch.data());
          for (std::int64_t k = 0; k < K; ++k) {
            const T pk = patch[static_cast<std::size_t>(k)];
            if (pk != T(0)) axpy(pk, go, pw + k * F, F);
          }
          if (gin_n) {
            std::fill(gpatch.begin(), gpatch.end(), T(0));
            for (std::int64_t f = 0; f < F; ++f) {
              if (go[f] != T(0)) axpy(go[f], wt.data() + f * K, gpatch.data(), K);
            }
            scatter_patch(gpatch.data(), H, W, C, y, x, gin_n);
          }
        }
      }
    }
  }

  grads.weights = BasicTensor<T>(weights.shape());
  grads.bias = BasicTensor<T>(Shape{F});
  T* gw = grads.weights.data();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < K * F; ++i) {
    T acc = T(0);
    for (std::int64_t n = 0; n < N; ++n) acc += partial_w[n * K * F + i];
    gw[i] = acc;
  }
  for (std::int64_t f = 0; f < F; ++f) {
    T acc = T(0);
    for (std::int64_t n = 0; n < N; ++n) acc += partial_b[n * F + f];
    grads.bias[f] = acc;
  }
  return grads;
}

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x) {
  BasicTensor<T> out(x.shape());
  const std::int64_t n = static_cast<std::int64_t>(x.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) out[i] = x[i] > T(0) ? x[i] : T(0);
  return out;
}

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& x, const BasicTensor<T>& grad_out) {
  if (x.shape() != grad_out.shape()) {
    throw ShapeError("relu_backward: " + x.shape().str() + " vs " + grad_out.shape().str());
  }
  BasicTensor<T> out(x.shape());
  const std::int64_t n = static_cast<std::int64_t>(x.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) out[i] = x[i] > T(0) ? grad_out[i] : T(0);
  return out;
}

template <typename T>
PoolResult<T> maxpool_forward(const BasicTensor<T>& input) {
  detail::check_pool_input(input.shape());
  const Shape& s = input.shape();
  const std::int64_t N = s[0], H = s[1], W = s[2], C = s[3];
  const Shape out_shape = detail::pooled_shape(s);
  const std::int64_t OH = out_shape[1], OW = out_shape[2];

  PoolResult<T> r{BasicTensor<T>(out_shape), ArgmaxMask{s, out_shape, {}}};
  r.mask.index.resize(static_cast<std::size_t>(out_shape.elements()));
  const T* in = input.data();

#pragma omp parallel for schedule(static)
  for (std::int64_t row = 0; row < N * OH; ++row) {
    const std::int64_t n = row / OH, oy = row % OH;
    for (std::int64_t ox = 0; ox < OW; ++ox) {
      const std::int64_t base = ((n * H + 2 * oy) * W + 2 * ox) * C;
      const std::int64_t offsets[4] = {0, C, W * C, W * C + C};
      const std::int64_t dst = ((n * OH + oy) * OW + ox) * C;
      for (std::int64_t c = 0; c < C; ++c) {
        std::int64_t best = base + c;
        for (int k = 1; k < 4; ++k) {
          const std::int64_t cand = base + offsets[k] + c;
          if (in[cand] > in[best]) best = cand;
        }
        r.output[dst + c] = in[best];
        r.mask.index[dst + c] = best;
      }
    }
  }
  return r;
}

template <typename T>
BasicTensor<T> maxpool_backward(const ArgmaxMask& mask, const BasicTensor<T>& grad_out) {
  detail::check_pool_backward(mask, grad_out);
  BasicTensor<T> grad_in(mask.input_shape);
  // Windows never overlap, so every input cell receives at most one write.
  const std::int64_t n = static_cast<std::int64_t>(mask.index.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) grad_in[mask.index[i]] = grad_out[i];
  return grad_in;
}

template <typename T>
BasicTensor<T> dense_forward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                             const BasicTensor<T>& bias) {
  detail::check_dense_forward(input, weights, bias);
  const std::int64_t N = input.shape()[0], K = input.shape()[1], U = weights.shape()[1];
  BasicTensor<T> out(Shape{N, U});
  const T* w = weights.data();

#pragma omp parallel for schedule(static)
  for (std::int64_t n = 0; n < N; ++n) {
    T* dst = out.data() + n * U;
    std::copy(bias.data(), bias.data() + U, dst);
    const T* a = input.data() + n * K;
    for (std::int64_t k = 0; k < K; ++k) {
      if (a[k] != T(0)) axpy(a[k], w + k * U, dst, U);
    }
  }
  return out;
}

template <typename T>
DenseGrads<T> dense_backward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                             const BasicTensor<T>& grad_out, bool want_input_grad) {
  detail::check_dense_backward(input, weights, grad_out);
  const std::int64_t N = input.shape()[0], K = input.shape()[1], U = weights.shape()[1];
  DenseGrads<T> grads{BasicTensor<T>(), BasicTensor<T>(weights.shape()), BasicTensor<T>(Shape{U})};
  const T* a = input.data();
  const T* g = grad_out.data();
  const T* w = weights.data();

  if (want_input_grad) {
    grads.input = BasicTensor<T>(input.shape());
    T* gi = grads.input.data();
#pragma omp parallel for schedule(static)
    for (std::int64_t k = 0; k < K; ++k) {
      for (std::int64_t n = 0; n < N; ++n) gi[n * K + k] = dot(g + n * U, w + k * U, U);
    }
  }

  T* gw = grads.weights.data();
#pragma omp parallel for schedule(static)
  for (std::int64_t k = 0; k < K; ++k) {
    T* dst = gw + k * U;
    for (std::int64_t n = 0; n < N; ++n) {
      const T ak = a[n * K + k];
      if (ak != T(0)) axpy(ak, g + n * U, dst, U);
    }
  }
  for (std::int64_t n = 0; n < N; ++n) axpy(T(1), g + n * U, grads.bias.data(), U);
  return grads;
}

template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& logits) {
  detail::require_rank(logits.shape(), 2, "softmax");
  if (!logits.all_finite()) throw NumericError("softmax: non-finite logits");
  const std::int64_t N = logits.shape()[0], K = logits.shape()[1];
  BasicTensor<T> out(logits.shape());
  for (std::int64_t n = 0; n < N; ++n) {
    const T* z = logits.data() + n * K;
    T* p = out.data() + n * K;
    const T m = *std::max_element(z, z + K);
    T sum = T(0);
    for (std::int64_t j = 0; j < K; ++j) {
      p[j] = std::exp(z[j] - m);
      sum += p[j];
    }
    for (std::int64_t j = 0; j < K; ++j) p[j] /= sum;
  }
  return out;
}

#define LEAFNET_INSTANTIATE(T)                                                                   \
  template BasicTensor<T> conv2d_forward(const BasicTensor<T>&, const BasicTensor<T>&,          \
                                         const BasicTensor<T>&);                                 \
  template ConvGrads<T> conv2d_backward(const BasicTensor<T>&, const BasicTensor<T>&,           \
                                        const BasicTensor<T>&, bool);                            \
  template BasicTensor<T> relu(const BasicTensor<T>&);                                           \
  template BasicTensor<T> relu_backward(const BasicTensor<T>&, const BasicTensor<T>&);           \
  template PoolResult<T> maxpool_forward(const BasicTensor<T>&);                                 \
  template BasicTensor<T> maxpool_backward(const ArgmaxMask&, const BasicTensor<T>&);            \
  template BasicTensor<T> dense_forward(const BasicTensor<T>&, const BasicTensor<T>&,           \
                                        const BasicTensor<T>&);                                  \
  template DenseGrads<T> dense_backward(const BasicTensor<T>&, const BasicTensor<T>&,           \
                                        const BasicTensor<T>&, bool);                            \
  template BasicTensor<T> softmax(const BasicTensor<T>&);

LEAFNET_INSTANTIATE(float)
LEAFNET_INSTANTIATE(double)
#undef LEAFNET_INSTANTIATE

}  // namespace leafnet::kernels
