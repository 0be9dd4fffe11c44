#include "leafnet/adam.hpp"

#include <cmath>

#include "leafnet/errors.hpp"

namespace leafnet {

template <typename T>
AdamState<T>::AdamState(const ParamSet<T>& params, AdamConfig cfg) : config(cfg) {
  m.reserve(params.size());
  v.reserve(params.size());
  for (const auto& p : params) {
    if (p.present()) {
      m.push_back({BasicTensor<T>(p.weights.shape()), BasicTensor<T>(p.bias.shape())});
      v.push_back({BasicTensor<T>(p.weights.shape()), BasicTensor<T>(p.bias.shape())});
    } else {
      m.emplace_back();
      v.emplace_back();
    }
  }
}

namespace {

template <typename T>
void update(BasicTensor<T>& theta, BasicTensor<T>& m, BasicTensor<T>& v, const BasicTensor<T>& g,
            const AdamConfig& c, double correction1, double correction2) {
  const T b1 = static_cast<T>(c.beta1), b2 = static_cast<T>(c.beta2);
  const T one_b1 = static_cast<T>(1.0 - c.beta1), one_b2 = static_cast<T>(1.0 - c.beta2);
  const T lr = static_cast<T>(c.learning_rate), eps = static_cast<T>(c.epsilon);
  const T c1 = static_cast<T>(correction1), c2 = static_cast<T>(correction2);
  const std::int64_t n = static_cast<std::int64_t>(theta.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    m[i] = b1 * m[i] + one_b1 * g[i];
    v[i] = b2 * v[i] + one_b2 * g[i] * g[i];
    const T m_hat = m[i] / c1;
    const T v_hat = v[i] / c2;
    theta[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

}  // namespace

template <typename T>
void adam_step(AdamState<T>& state, ParamSet<T>& params, const ParamSet<T>& grads) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw ShapeError("adam_step: parameter, gradient and state lists differ in length");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].weights.shape() != grads[i].weights.shape() ||
        params[i].bias.shape() != grads[i].bias.shape() ||
        params[i].weights.shape() != state.m[i].weights.shape()) {
      throw ShapeError("adam_step: gradient shapes do not match parameters at layer " + std::to_string(i));
    }
    if (!grads[i].weights.all_finite() || !grads[i].bias.all_finite()) {
      throw NumericError("adam_step: non-finite gradient at layer " + std::to_string(i));
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.config.beta1, t);
  const double c2 = 1.0 - std::pow(state.config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].present()) continue;
    update(params[i].weights, state.m[i].weights, state.v[i].weights, grads[i].weights, state.config, c1, c2);
    update(params[i].bias, state.m[i].bias, state.v[i].bias, grads[i].bias, state.config, c1, c2);
  }
}

template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step(AdamState<float>&, ParamSet<float>&, const ParamSet<float>&);
template void adam_step(AdamState<double>&, ParamSet<double>&, const ParamSet<double>&);

}  // namespace leafnet
