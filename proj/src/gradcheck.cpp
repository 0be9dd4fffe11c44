#include "leafnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "leafnet/kernels.hpp"
#include "leafnet/loss.hpp"
#include "leafnet/rng.hpp"

namespace leafnet {
namespace {

std::vector<std::int64_t> pick_coords(std::int64_t size, const GradCheckOptions& opt, Rng& rng) {
  std::vector<std::int64_t> coords(static_cast<std::size_t>(size));
  std::iota(coords.begin(), coords.end(), std::int64_t{0});
  if (size <= opt.max_coords_per_tensor) return coords;
  // Partial Fisher-Yates: the first k slots become a uniform sample.
  const auto k = static_cast<std::size_t>(opt.max_coords_per_tensor);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.bounded(static_cast<std::uint32_t>(coords.size() - i));
    std::swap(coords[i], coords[j]);
  }
  coords.resize(k);
  std::sort(coords.begin(), coords.end());
  return coords;
}

// Which side of every ReLU kink and which pooling winner the forward pass used.
std::vector<std::int64_t> activation_pattern(const Model64& model, const ForwardTrace<double>& trace) {
  std::vector<std::int64_t> pattern;
  const auto& layers = model.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const bool relu = std::holds_alternative<Conv2DSpec>(layers[i]) ||
                      (std::holds_alternative<DenseSpec>(layers[i]) &&
                       std::get<DenseSpec>(layers[i]).activation == Activation::Relu);
    if (relu) {
      for (const double v : trace.activations[i + 1].values()) pattern.push_back(v > 0.0);
    }
    if (std::holds_alternative<MaxPoolSpec>(layers[i])) {
      pattern.insert(pattern.end(), trace.masks[i].index.begin(), trace.masks[i].index.end());
    }
  }
  return pattern;
}

void record(GradCheckReport& r, double analytic, double numeric, double tol, double floor,
            const std::string& where) {
  const double err = relative_error(analytic, numeric, floor);
  ++r.checked;
  if (err > r.max_rel_error || !std::isfinite(err)) {
    r.max_rel_error = err;
    r.worst = where;
  }
  if (!(err <= tol)) r.passed = false;
}

std::vector<double> random_vector(std::size_t n, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng_uniform(rng, lo, hi);
  return v;
}

Tensor64 as_tensor(const Shape& s, std::span<const double> x) {
  return Tensor64(s, std::vector<double>(x.begin(), x.end()));
}

std::vector<double> as_vector(const Tensor64& t) { return {t.values().begin(), t.values().end()}; }

}  // namespace

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport gradient_check(const Model64& model, const Tensor64& batch, std::span<const int> labels,
                               double tol, const GradCheckOptions& opt) {
  GradCheckReport report;
  if (model.param_count() == 0) return report;

  const auto base = model_forward(model, batch, Mode::Eval);
  const auto base_pattern = activation_pattern(model, base);
  const auto grads = model_backward(model, base, sparse_ce_grad(base.logits(), labels));

  Model64 work = model;
  Rng rng(opt.seed, streams::kGradcheck);
  auto probe = [&](double& slot, double value, std::vector<std::int64_t>& pattern) {
    slot = value;
    const auto trace = model_forward(work, batch, Mode::Eval);
    pattern = activation_pattern(work, trace);
    return sparse_ce_loss(trace.logits(), labels);
  };

  for (std::size_t layer = 0; layer < model.layers().size(); ++layer) {
    if (!model.params()[layer].present()) continue;
    for (int which = 0; which < 2; ++which) {
      Tensor64& theta = which == 0 ? work.params()[layer].weights : work.params()[layer].bias;
      const Tensor64& analytic = which == 0 ? grads[layer].weights : grads[layer].bias;
      for (const std::int64_t c : pick_coords(static_cast<std::int64_t>(theta.size()), opt, rng)) {
        const double orig = theta[c];
        const double h = opt.step * std::max(1.0, std::abs(orig));
        std::vector<std::int64_t> p_plus, p_minus;
        const double up = probe(theta[c], orig + h, p_plus);
        const double down = probe(theta[c], orig - h, p_minus);
        theta[c] = orig;
        if (p_plus != base_pattern || p_minus != base_pattern) {
          ++report.skipped;
          continue;
        }
        record(report, analytic[c], (up - down) / (2 * h), tol, opt.denominator_floor,
               "layer " + std::to_string(layer) + (which == 0 ? " weights[" : " bias[") + std::to_string(c) + "]");
      }
    }
  }
  return report;
}

GradCheckReport check_vjp(std::span<const double> x, std::span<const double> projection, const VecFn& forward,
                          const VjpFn& vjp, double tol, const PatternFn& pattern, const GradCheckOptions& opt) {
  GradCheckReport report;
  const std::vector<double> analytic = vjp(x, projection);
  const auto base_pattern = pattern ? pattern(x) : std::vector<std::int64_t>{};
  std::vector<double> probe(x.begin(), x.end());
  auto objective = [&](bool& same_regime) {
    const auto y = forward(probe);
    if (pattern && pattern(probe) != base_pattern) same_regime = false;
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += projection[i] * y[i];
    return s;
  };
  Rng rng(opt.seed, streams::kGradcheck);
  for (const std::int64_t c : pick_coords(static_cast<std::int64_t>(x.size()), opt, rng)) {
    const double orig = x[c];
    const double h = opt.step * std::max(1.0, std::abs(orig));
    bool same = true;
    probe[c] = orig + h;
    const double up = objective(same);
    probe[c] = orig - h;
    const double down = objective(same);
    probe[c] = orig;
    if (!same) {
      ++report.skipped;
      continue;
    }
    record(report, analytic[c], (up - down) / (2 * h), tol, opt.denominator_floor, "x[" + std::to_string(c) + "]");
  }
  return report;
}

std::vector<NamedReport> layer_gradient_checks(double tol, std::uint64_t seed) {
  Rng rng(seed, streams::kGradcheck);
  std::vector<NamedReport> out;

  {  // conv2d: N=2, 5x5, C=2 -> F=3
    const Shape xs{2, 5, 5, 2}, ws{3, 3, 2, 3}, bs{3}, ys{2, 5, 5, 3};
    const auto x = random_vector(xs.elements(), rng);
    const auto w = random_vector(ws.elements(), rng);
    const auto b = random_vector(bs.elements(), rng);
    const auto r = random_vector(ys.elements(), rng);
    auto fwd = [&](std::span<const double> xv, std::span<const double> wv, std::span<const double> bv) {
      return as_vector(kernels::conv2d_forward(as_tensor(xs, xv), as_tensor(ws, wv), as_tensor(bs, bv)));
    };
    auto grads = [&](std::span<const double> xv, std::span<const double> wv, std::span<const double> g) {
      return kernels::conv2d_backward(as_tensor(xs, xv), as_tensor(ws, wv), as_tensor(ys, g));
    };
    out.push_back({"conv2d/input", check_vjp(
        x, r, [&](auto xv) { return fwd(xv, w, b); },
        [&](auto xv, auto g) { return as_vector(grads(xv, w, g).input); }, tol)});
    out.push_back({"conv2d/weights", check_vjp(
        w, r, [&](auto wv) { return fwd(x, wv, b); },
        [&](auto wv, auto g) { return as_vector(grads(x, wv, g).weights); }, tol)});
    out.push_back({"conv2d/bias", check_vjp(
        b, r, [&](auto bv) { return fwd(x, w, bv); },
        [&](auto, auto g) { return as_vector(grads(x, w, g).bias); }, tol)});
  }

  {  // relu, inputs kept away from the kink
    const Shape s{64};
    auto x = random_vector(64, rng);
    for (auto& v : x) v = std::copysign(std::max(std::abs(v), 1e-2), v);
    const auto r = random_vector(64, rng);
    out.push_back({"relu", check_vjp(
        x, r, [&](auto xv) { return as_vector(kernels::relu(as_tensor(s, xv))); },
        [&](auto xv, auto g) { return as_vector(kernels::relu_backward(as_tensor(s, xv), as_tensor(s, g))); }, tol,
        [&](auto xv) {
          std::vector<std::int64_t> p;
          for (const double v : xv) p.push_back(v > 0);
          return p;
        })});
  }

  {  // maxpool, 6x6 with two channels
    const Shape s{1, 6, 6, 2};
    const auto x = random_vector(s.elements(), rng);
    const auto r = random_vector(18, rng);
    out.push_back({"maxpool", check_vjp(
        x, r, [&](auto xv) { return as_vector(kernels::maxpool_forward(as_tensor(s, xv)).output); },
        [&](auto xv, auto g) {
          const auto pr = kernels::maxpool_forward(as_tensor(s, xv));
          return as_vector(kernels::maxpool_backward(pr.mask, as_tensor(pr.mask.output_shape, g)));
        }, tol,
        [&](auto xv) { return kernels::maxpool_forward(as_tensor(s, xv)).mask.index; })});
  }

  {  // dense (2,3) x (3,4)
    const Shape xs{2, 3}, ws{3, 4}, bs{4}, ys{2, 4};
    const auto x = random_vector(6, rng), w = random_vector(12, rng), b = random_vector(4, rng);
    const auto r = random_vector(8, rng);
    auto fwd = [&](std::span<const double> xv, std::span<const double> wv, std::span<const double> bv) {
      return as_vector(kernels::dense_forward(as_tensor(xs, xv), as_tensor(ws, wv), as_tensor(bs, bv)));
    };
    auto grads = [&](std::span<const double> xv, std::span<const double> wv, std::span<const double> g) {
      return kernels::dense_backward(as_tensor(xs, xv), as_tensor(ws, wv), as_tensor(ys, g));
    };
    out.push_back({"dense/input", check_vjp(
        x, r, [&](auto xv) { return fwd(xv, w, b); },
        [&](auto xv, auto g) { return as_vector(grads(xv, w, g).input); }, tol)});
    out.push_back({"dense/weights", check_vjp(
        w, r, [&](auto wv) { return fwd(x, wv, b); },
        [&](auto wv, auto g) { return as_vector(grads(x, wv, g).weights); }, tol)});
    out.push_back({"dense/bias", check_vjp(
        b, r, [&](auto bv) { return fwd(x, w, bv); },
        [&](auto, auto g) { return as_vector(grads(x, w, g).bias); }, tol)});
  }

  {  // softmax cross-entropy, N=3, K=5
    const Shape s{3, 5};
    const auto z = random_vector(15, rng, -3.0, 3.0);
    const std::vector<int> labels{0, 3, 4};
    const std::vector<double> r{1.0};
    out.push_back({"softmax_ce", check_vjp(
        z, r, [&](auto zv) { return std::vector<double>{sparse_ce_loss(as_tensor(s, zv), labels)}; },
        [&](auto zv, auto) { return as_vector(sparse_ce_grad(as_tensor(s, zv), labels)); }, tol)});
  }
  return out;
}

}  // namespace leafnet
