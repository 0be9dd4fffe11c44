#pragma once

#include <cstdint>

#include "leafnet/model.hpp"

namespace leafnet {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
};

/// First and second moment estimates, shaped like the parameters they track.
template <typename T>
struct AdamState {
  AdamConfig config;
  std::int64_t step = 0;
  ParamSet<T> m;
  ParamSet<T> v;

  AdamState() = default;
  AdamState(const ParamSet<T>& params, AdamConfig cfg = {});
};

/// Bias-corrected Adam update:
///   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2,
///   theta <- theta - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps).
/// Throws NumericError (and leaves everything untouched) on a non-finite
/// gradient.
template <typename T>
void adam_step(AdamState<T>& state, ParamSet<T>& params, const ParamSet<T>& grads);

}  // namespace leafnet
