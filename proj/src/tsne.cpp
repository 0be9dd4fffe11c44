#include "leafnet/tsne.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "leafnet/errors.hpp"
#include "leafnet/rng.hpp"

namespace leafnet {
namespace {

constexpr double kEntropyTolerance = 1e-5;  // bits
constexpr int kMaxBisection = 64;
constexpr double kTiny = 1e-12;

Tensor64 squared_distances(const Tensor64& x) {
  const std::int64_t n = x.shape()[0], d = x.shape()[1];
  Tensor64 dist(Shape{n, n});
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::int64_t k = 0; k < d; ++k) {
        const double t = x[i * d + k] - x[j * d + k];
        s += t * t;
      }
      dist[i * n + j] = s;
    }
  }
  return dist;
}

void check_points(const Tensor64& x, const char* what) {
  if (x.shape().rank() != 2) throw ShapeError(std::string(what) + ": expected an (n, d) matrix");
  if (!x.all_finite()) throw NumericError(std::string(what) + ": non-finite input");
}

// Fills row i of p for precision beta; returns the entropy in bits.
double gaussian_row(const double* dist, std::int64_t n, std::int64_t i, double beta, double* row) {
  double min_d = std::numeric_limits<double>::infinity();
  for (std::int64_t j = 0; j < n; ++j)
    if (j != i) min_d = std::min(min_d, dist[j]);
  double sum = 0.0;
  for (std::int64_t j = 0; j < n; ++j) {
    row[j] = j == i ? 0.0 : std::exp(-beta * (dist[j] - min_d));
    sum += row[j];
  }
  double h = 0.0;
  for (std::int64_t j = 0; j < n; ++j) {
    row[j] /= sum;
    if (row[j] > 0.0) h -= row[j] * std::log2(row[j]);
  }
  return h;
}

}  // namespace

void TsneConfig::validate() const {
  if (!(perplexity >= 2.0)) throw ArgumentError("t-SNE perplexity must be >= 2");
  if (iterations < 250) throw ArgumentError("t-SNE needs at least 250 iterations");
  if (!(learning_rate > 0.0)) throw ArgumentError("t-SNE learning rate must be positive");
  if (kl_interval < 1) throw ArgumentError("t-SNE KL interval must be >= 1");
}

double capped_perplexity(double perplexity, std::size_t n) {
  return std::min(perplexity, (static_cast<double>(n) - 1.0) / 3.0);
}

ConditionalAffinities conditional_affinities(const Tensor64& x, double perplexity) {
  check_points(x, "perplexity_affinities");
  const std::int64_t n = x.shape()[0];
  if (n < 3) throw ArgumentError("perplexity_affinities: need at least 3 points");
  if (!(perplexity >= 1.0) || perplexity > static_cast<double>(n - 1)) {
    throw ArgumentError("perplexity " + std::to_string(perplexity) + " must lie in [1, n - 1] for n = " +
                        std::to_string(n));
  }
  const Tensor64 dist = squared_distances(x);
  double max_d = 0.0;
  for (const double v : dist.values()) max_d = std::max(max_d, v);
  if (max_d == 0.0) throw NumericError("perplexity_affinities: all points coincide");

  const double target = std::log2(perplexity);
  ConditionalAffinities out{Tensor64(Shape{n, n}), std::vector<double>(static_cast<std::size_t>(n))};
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const double* di = dist.data() + i * n;
    double* row = out.p.data() + i * n;
    double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
    for (int step = 0; step < kMaxBisection; ++step) {
      const double h = gaussian_row(di, n, i, beta, row);
      if (std::abs(h - target) < kEntropyTolerance) break;
      if (h > target) {  // too flat: sharpen
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = 0.5 * (beta + lo);
      }
    }
    // Leave the row consistent with the final beta.
    gaussian_row(di, n, i, beta, row);
    out.beta[i] = beta;
  }
  return out;
}

Tensor64 perplexity_affinities(const Tensor64& x, double perplexity) {
  const auto cond = conditional_affinities(x, perplexity);
  const std::int64_t n = x.shape()[0];
  Tensor64 p(Shape{n, n});
  const double scale = 1.0 / (2.0 * static_cast<double>(n));
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < n; ++j) p[i * n + j] = (cond.p[i * n + j] + cond.p[j * n + i]) * scale;
  return p;
}

std::vector<double> row_perplexities(const Tensor64& p_cond) {
  const std::int64_t n = p_cond.shape()[0], m = p_cond.shape()[1];
  std::vector<double> out(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    double h = 0.0;
    for (std::int64_t j = 0; j < m; ++j) {
      const double v = p_cond[i * m + j];
      if (v > 0.0) h -= v * std::log2(v);
    }
    out[i] = std::exp2(h);
  }
  return out;
}

namespace {

// Unnormalized Student-t kernel 1 / (1 + |y_i - y_j|^2) with zero diagonal;
// returns its sum.
double student_kernel(const Tensor64& y, Tensor64& num) {
  const std::int64_t n = y.shape()[0];
  std::vector<double> row_sums(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::int64_t j = 0; j < n; ++j) {
      if (i == j) {
        num[i * n + j] = 0.0;
        continue;
      }
      const double dx = y[2 * i] - y[2 * j], dy = y[2 * i + 1] - y[2 * j + 1];
      num[i * n + j] = 1.0 / (1.0 + dx * dx + dy * dy);
      s += num[i * n + j];
    }
    row_sums[i] = s;
  }
  double total = 0.0;
  for (const double s : row_sums) total += s;
  return total;
}

double kl_from_kernel(const Tensor64& p, const Tensor64& num, double sum) {
  double kl = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] <= 0.0) continue;
    const double q = std::max(num[k] / sum, kTiny);
    kl += p[k] * std::log(p[k] / q);
  }
  return std::max(kl, 0.0);
}

}  // namespace

double tsne_kl(const Tensor64& p, const Tensor64& points) {
  const std::int64_t n = points.shape()[0];
  Tensor64 num(Shape{n, n});
  const double sum = student_kernel(points, num);
  return kl_from_kernel(p, num, sum);
}

EmbeddingProjection tsne_embed(const Tensor64& p, const TsneConfig& config) {
  config.validate();
  if (p.shape().rank() != 2 || p.shape()[0] != p.shape()[1]) throw ShapeError("tsne_embed: P must be square");
  if (!p.all_finite()) throw NumericError("tsne_embed: non-finite affinities");
  const std::int64_t n = p.shape()[0];

  Rng rng(config.seed, streams::kTsne);
  EmbeddingProjection out;
  out.points = Tensor64(Shape{n, 2});
  for (auto& v : out.points.values()) v = 1e-4 * rng.next_gaussian();

  Tensor64& y = out.points;
  Tensor64 num(Shape{n, n});
  std::vector<double> grad(static_cast<std::size_t>(2 * n)), velocity(static_cast<std::size_t>(2 * n), 0.0);

  for (int it = 0; it < config.iterations; ++it) {
    const double exaggeration = it < config.exaggeration_iterations ? config.early_exaggeration : 1.0;
    const double momentum = it < config.momentum_switch_iteration ? config.initial_momentum : config.final_momentum;
    const double sum = student_kernel(y, num);

#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
      double gx = 0.0, gy = 0.0;
      for (std::int64_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const double q = std::max(num[i * n + j] / sum, kTiny);
        const double coeff = (exaggeration * p[i * n + j] - q) * num[i * n + j];
        gx += coeff * (y[2 * i] - y[2 * j]);
        gy += coeff * (y[2 * i + 1] - y[2 * j + 1]);
      }
      grad[2 * i] = 4.0 * gx;
      grad[2 * i + 1] = 4.0 * gy;
    }

    double mean_x = 0.0, mean_y = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      for (int c = 0; c < 2; ++c) {
        const std::size_t k = static_cast<std::size_t>(2 * i + c);
        velocity[k] = momentum * velocity[k] - config.learning_rate * grad[k];
        y[k] += velocity[k];
      }
      mean_x += y[2 * i];
      mean_y += y[2 * i + 1];
    }
    mean_x /= static_cast<double>(n);
    mean_y /= static_cast<double>(n);
    for (std::int64_t i = 0; i < n; ++i) {
      y[2 * i] -= mean_x;
      y[2 * i + 1] -= mean_y;
    }
    if (!y.all_finite()) throw NumericError("tsne_embed: embedding diverged at iteration " + std::to_string(it + 1));

    if ((it + 1) % config.kl_interval == 0) out.kl_trace.push_back({it + 1, tsne_kl(p, y)});
  }
  return out;
}

ClusterStats cluster_stats(const Tensor64& points, std::span<const int> labels) {
  if (points.shape().rank() != 2 || static_cast<std::size_t>(points.shape()[0]) != labels.size() || labels.empty()) {
    throw ArgumentError("cluster_stats: need an (n, d) matrix with n labels, n >= 1");
  }
  const std::int64_t n = points.shape()[0], d = points.shape()[1];
  int k_max = -1;
  for (const int l : labels) {
    if (l < 0) throw ArgumentError("cluster_stats: negative label");
    k_max = std::max(k_max, l);
  }
  const auto K = static_cast<std::size_t>(k_max + 1);
  std::vector<std::int64_t> counts(K, 0);
  std::vector<double> centroids(K * static_cast<std::size_t>(d), 0.0);
  for (std::int64_t i = 0; i < n; ++i) {
    ++counts[labels[i]];
    for (std::int64_t c = 0; c < d; ++c) centroids[labels[i] * d + c] += points[i * d + c];
  }
  for (std::size_t k = 0; k < K; ++k) {
    if (counts[k] == 0) throw ArgumentError("cluster_stats: class " + std::to_string(k) + " has no points");
    for (std::int64_t c = 0; c < d; ++c) centroids[k * d + c] /= static_cast<double>(counts[k]);
  }
  auto distance = [d](const double* a, const double* b) {
    double s = 0.0;
    for (std::int64_t c = 0; c < d; ++c) s += (a[c] - b[c]) * (a[c] - b[c]);
    return std::sqrt(s);
  };

  ClusterStats stats{std::vector<double>(K, 0.0), Tensor64(Shape{static_cast<std::int64_t>(K), static_cast<std::int64_t>(K)})};
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = i + 1; j < n; ++j)
      if (labels[i] == labels[j]) {
        double& diam = stats.diameters[labels[i]];
        diam = std::max(diam, distance(points.data() + i * d, points.data() + j * d));
      }
  for (std::size_t a = 0; a < K; ++a)
    for (std::size_t b = a + 1; b < K; ++b) {
      const double dist = distance(centroids.data() + a * d, centroids.data() + b * d);
      stats.centroid_distances[a * K + b] = dist;
      stats.centroid_distances[b * K + a] = dist;
    }
  return stats;
}

double silhouette_score(const Tensor64& points, std::span<const int> labels) {
  if (points.shape().rank() != 2 || static_cast<std::size_t>(points.shape()[0]) != labels.size() || labels.size() < 2) {
    throw ArgumentError("silhouette_score: need an (n, d) matrix with n >= 2 labels");
  }
  const std::int64_t n = points.shape()[0], d = points.shape()[1];
  const int K = *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<double> scores(static_cast<std::size_t>(n), 0.0);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    std::vector<double> sum(static_cast<std::size_t>(K), 0.0);
    std::vector<std::int64_t> cnt(static_cast<std::size_t>(K), 0);
    for (std::int64_t j = 0; j < n; ++j) {
      if (i == j) continue;
      double s = 0.0;
      for (std::int64_t c = 0; c < d; ++c) s += (points[i * d + c] - points[j * d + c]) * (points[i * d + c] - points[j * d + c]);
      sum[labels[j]] += std::sqrt(s);
      ++cnt[labels[j]];
    }
    const int own = labels[i];
    if (cnt[own] == 0) continue;  // singleton cluster
    const double a = sum[own] / static_cast<double>(cnt[own]);
    double b = std::numeric_limits<double>::infinity();
    for (int k = 0; k < K; ++k)
      if (k != own && cnt[k] > 0) b = std::min(b, sum[k] / static_cast<double>(cnt[k]));
    if (std::isinf(b)) continue;
    const double m = std::max(a, b);
    scores[i] = m > 0.0 ? (b - a) / m : 0.0;
  }
  double total = 0.0;
  for (const double s : scores) total += s;
  return total / static_cast<double>(n);
}

}  // namespace leafnet
