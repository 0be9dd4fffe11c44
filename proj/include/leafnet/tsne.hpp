#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "leafnet/tensor.hpp"

namespace leafnet {

/// Exact (O(n^2)) t-SNE to two dimensions.
struct TsneConfig {
  double perplexity = 30.0;
  int iterations = 1000;
  double learning_rate = 200.0;
  double early_exaggeration = 12.0;
  int exaggeration_iterations = 250;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  int momentum_switch_iteration = 250;
  std::uint64_t seed = 0;
  int kl_interval = 50;

  void validate() const;
};

/// min(perplexity, (n - 1) / 3).
double capped_perplexity(double perplexity, std::size_t n);

struct ConditionalAffinities {
  Tensor64 p;                 // (n, n) rows p_{j|i}, zero diagonal, rows sum to 1
  std::vector<double> beta;   // Gaussian precision 1 / (2 sigma_i^2) per row
};

/// Per-row binary search over the Gaussian precision until the row's
/// perplexity 2^H matches the target (entropy within 1e-5 bits, at most 64
/// bisection steps). Requires n >= 3 and 1 <= perplexity <= n - 1 (the
/// largest achievable value); callers apply capped_perplexity() first.
/// Throws NumericError when all points coincide.
ConditionalAffinities conditional_affinities(const Tensor64& x, double perplexity);

/// Symmetrized joint affinities P = (P_cond + P_cond^T) / (2n).
Tensor64 perplexity_affinities(const Tensor64& x, double perplexity);

/// Perplexity 2^H of each row of a row-stochastic matrix.
std::vector<double> row_perplexities(const Tensor64& p_cond);

struct KlSample {
  int iteration;  // 1-based iteration after which it was taken
  double kl;
};

struct EmbeddingProjection {
  Tensor64 points;  // (n, 2)
  std::vector<int> labels;
  std::vector<KlSample> kl_trace;
};

/// Gradient descent on KL(P || Q) with Student-t low-dimensional affinities,
/// momentum, and early exaggeration. Initial points ~ N(0, 1e-4^2) drawn from
/// the config seed.
EmbeddingProjection tsne_embed(const Tensor64& p, const TsneConfig& config);

/// KL(P || Q) for an embedding.
double tsne_kl(const Tensor64& p, const Tensor64& points);

struct ClusterStats {
  std::vector<double> diameters;  // max pairwise distance within each class
  Tensor64 centroid_distances;    // (K, K), symmetric, zero diagonal
};

/// Classes are 0..max(label); each must have at least one point.
ClusterStats cluster_stats(const Tensor64& points, std::span<const int> labels);

/// Mean silhouette (b - a) / max(a, b) under Euclidean distance; singleton
/// clusters contribute 0.
double silhouette_score(const Tensor64& points, std::span<const int> labels);

}  // namespace leafnet
