#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <unistd.h>

#include "leafnet/rng.hpp"
#include "leafnet/tensor.hpp"

namespace testutil {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("leafnet_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

template <typename T>
leafnet::BasicTensor<T> random_tensor(const leafnet::Shape& s, leafnet::Rng& rng, double lo = -1.0, double hi = 1.0) {
  leafnet::BasicTensor<T> t(s);
  for (auto& v : t.values()) v = static_cast<T>(leafnet::rng_uniform(rng, lo, hi));
  return t;
}

template <typename T>
bool bitwise_equal(const leafnet::BasicTensor<T>& a, const leafnet::BasicTensor<T>& b) {
  if (!(a.shape() == b.shape())) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return false;
  }
  return true;
}

/// Central differences of a scalar function, step h * max(1, |x_i|).
inline std::vector<double> numeric_gradient(std::vector<double> x, const std::function<double(const std::vector<double>&)>& f,
                                            double h = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    const double step = h * std::max(1.0, std::abs(orig));
    x[i] = orig + step;
    const double fp = f(x);
    x[i] = orig - step;
    const double fm = f(x);
    x[i] = orig;
    g[i] = (fp - fm) / (2 * step);
  }
  return g;
}

inline double max_relative_error(const std::vector<double>& a, const std::vector<double>& n, double floor = 1e-6) {
  double worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a[i]), std::abs(n[i]), floor});
    worst = std::max(worst, std::abs(a[i] - n[i]) / denom);
  }
  return worst;
}

}  // namespace testutil

#include "leafnet/model.hpp"

namespace testutil {

/// A random valid layer list: optional Rescale, 0-2 conv/pool stages, Flatten,
/// 0-1 hidden Dense, SoftmaxOutput. Input is (size, size, 3).
inline std::vector<leafnet::LayerSpec> random_architecture(leafnet::Rng& rng, std::int64_t size) {
  using namespace leafnet;
  std::vector<LayerSpec> layers;
  if (rng.bounded(2)) layers.push_back(RescaleSpec{rng.bounded(2) ? 1.0f / 255.0f : 0.5f});
  std::int64_t side = size;
  const auto stages = rng.bounded(3);
  for (std::uint32_t s = 0; s < stages; ++s) {
    layers.push_back(Conv2DSpec{1 + static_cast<std::int64_t>(rng.bounded(4))});
    if (side >= 2 && rng.bounded(2)) {
      layers.push_back(MaxPoolSpec{});
      side /= 2;
    }
  }
  layers.push_back(FlattenSpec{});
  if (rng.bounded(2)) {
    layers.push_back(DenseSpec{1 + static_cast<std::int64_t>(rng.bounded(6)),
                               rng.bounded(2) ? Activation::Relu : Activation::Linear});
  }
  layers.push_back(SoftmaxOutputSpec{2 + static_cast<std::int64_t>(rng.bounded(5))});
  return layers;
}

}  // namespace testutil
