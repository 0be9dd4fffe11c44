#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "leafnet/model.hpp"

namespace leafnet {

struct GradCheckOptions {
  /// Tensors with more coordinates than this are checked on a seeded random
  /// subsample of exactly this many coordinates.
  std::int64_t max_coords_per_tensor = 256;
  std::uint64_t seed = 0;
  /// Central-difference step is step * max(1, |theta|).
  double step = 1e-5;
  /// Relative error is |a - n| / max(|a|, |n|, denominator_floor).
  double denominator_floor = 1e-6;
};

struct GradCheckReport {
  std::int64_t checked = 0;
  /// Coordinates whose perturbation crossed a ReLU kink or flipped a pooling
  /// argmax; finite differences are meaningless there.
  std::int64_t skipped = 0;
  double max_rel_error = 0;
  std::string worst;  // location of max_rel_error
  bool passed = true;
};

double relative_error(double analytic, double numeric, double floor);

/// Compares model_backward against central differences of the mean
/// cross-entropy of `batch` for every parameter coordinate (subsampled for
/// large tensors). A model without parameters passes vacuously.
GradCheckReport gradient_check(const Model64& model, const Tensor64& batch, std::span<const int> labels,
                               double tol, const GradCheckOptions& options = {});

/// Generic vector-Jacobian check. With L(x) = sum_i r_i f(x)_i for the given
/// projection r, compares vjp(x, r) with central differences of L.
/// `pattern` (optional) summarizes the piecewise-linear regime at x; points
/// whose perturbation changes it are skipped.
using VecFn = std::function<std::vector<double>(std::span<const double>)>;
using VjpFn = std::function<std::vector<double>(std::span<const double>, std::span<const double>)>;
using PatternFn = std::function<std::vector<std::int64_t>(std::span<const double>)>;

GradCheckReport check_vjp(std::span<const double> x, std::span<const double> projection, const VecFn& forward,
                          const VjpFn& vjp, double tol, const PatternFn& pattern = {},
                          const GradCheckOptions& options = {});

struct NamedReport {
  std::string name;
  GradCheckReport report;
};

/// Checks every layer kernel in isolation on small random inputs (f64):
/// conv2d (input, weights, bias), relu, maxpool, dense (input, weights,
/// bias) and softmax cross-entropy.
std::vector<NamedReport> layer_gradient_checks(double tol, std::uint64_t seed = 0);

}  // namespace leafnet
