#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Dense>

namespace scoregeo {

/// A point, score vector or direction in the ambient space R^N.
using Vec = Eigen::VectorXd;

/// Checks that two vectors share a dimension; throws ArgumentError otherwise.
void require_same_dim(const Vec& a, const Vec& b, const char* what);

bool all_finite(const Vec& v);

/// The rank-one Stein score metric g(x) = I + lambda * s s^T, stored as (s, lambda).
///
/// The N x N matrix is never formed; every operation uses the rank-one structure.
struct SteinMetric {
  Vec score;
  double lambda = 0.0;

  SteinMetric() = default;
  SteinMetric(Vec s, double lam);

  Eigen::Index dim() const { return score.size(); }
};

/// u^T v + lambda (s^T u)(s^T v)
double metric_inner(const Vec& u, const Vec& v, const SteinMetric& m);

/// ||v||^2 + lambda (s^T v)^2
double metric_norm_sq(const Vec& v, const SteinMetric& m);

/// g v = v + lambda (s^T v) s
Vec metric_apply(const Vec& v, const SteinMetric& m);

/// g^{-1} b via Sherman-Morrison.
Vec metric_inverse_apply(const Vec& b, const SteinMetric& m);

struct MetricValidityReport {
  bool passed = true;
  std::int64_t trials = 0;
  /// min over trials of (v^T g v - ||v||^2) / ||v||^2; must be >= 0.
  double worst_pd_slack = 0.0;
  /// min over trials of ||v||^2 (strict positivity of the Euclidean part).
  double min_norm_sq = 0.0;
  /// max |<u,v>_g - <v,u>_g| relative to the magnitude of the terms.
  double worst_symmetry_error = 0.0;
  std::string failure;
};

/// Randomized symmetry and positive-definiteness check of a fixed metric.
MetricValidityReport metric_validity_check(const SteinMetric& m, std::int64_t trials,
                                           std::uint64_t rng_seed);

}  // namespace scoregeo
