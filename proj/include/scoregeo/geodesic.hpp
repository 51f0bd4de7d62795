#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scoregeo/error.hpp"
#include "scoregeo/schedule.hpp"
#include "scoregeo/scorefield.hpp"
#include "scoregeo/vecspace.hpp"

namespace scoregeo {

/// Ordered points gamma_0..gamma_n. Endpoints are fixed once constructed.
class DiscretePath {
 public:
  explicit DiscretePath(std::vector<Vec> points);

  /// gamma_i = (1 - i/n) a + (i/n) b
  static DiscretePath linear(const Vec& a, const Vec& b, int n_segments);

  int segments() const { return static_cast<int>(pts_.size()) - 1; }
  std::size_t size() const { return pts_.size(); }
  Eigen::Index dim() const { return pts_.front().size(); }
  const Vec& operator[](std::size_t i) const { return pts_[i]; }
  const std::vector<Vec>& points() const { return pts_; }
  const Vec& front() const { return pts_.front(); }
  const Vec& back() const { return pts_.back(); }

  /// Replaces an interior point; endpoints are rejected.
  void set_interior(std::size_t i, Vec v);
  Vec& interior(std::size_t i);

 private:
  std::vector<Vec> pts_;
};

struct AdamParams {
  double alpha = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct GeodesicConfig {
  /// Fixed metric penalty. When unset, lambda = lambda_scale / median ||s||^2 over the initial path.
  std::optional<double> lambda;
  double lambda_scale = 10.0;
  int n_segments = 8;
  int t_noise = 10;
  double lambda_smooth = 0.1;
  double lambda_mono = 0.1;
  int max_iters = 2000;
  int patience = 250;
  double rel_tol = 1e-6;
  AdamParams adam;
  /// Score evaluated at segment midpoints (true) or at the segment's first node.
  bool score_at_midpoints = true;
  /// Differentiate through s(.) with the field's Jacobian instead of holding s fixed.
  bool score_jacobian = false;
  /// Apply the first-order momentum transport after each position update.
  bool transport_momentum = true;
  int denoise_steps = 20;
  std::uint64_t rng_seed = 0;

  void validate() const;
  double resolved_lambda() const;
};

struct EnergyReport {
  double total = 0.0;
  double data_energy = 0.0;
  /// Weighted: lambda_smooth * R_smooth.
  double smooth_penalty = 0.0;
  /// Weighted: lambda_mono * R_mono.
  double mono_penalty = 0.0;
  std::vector<double> segment_energies;
};

struct EnergyTraceRow {
  int iter = 0;
  double total = 0.0;
  double data = 0.0;
  double smooth = 0.0;
  double mono = 0.0;
};

/// Thrown when the energy becomes non-finite; carries the trace up to that point.
class GeodesicDivergence : public EvaluationError {
 public:
  GeodesicDivergence(const std::string& what, std::vector<EnergyTraceRow> trace)
      : EvaluationError(what), trace_(std::move(trace)) {}
  const std::vector<EnergyTraceRow>& trace() const { return trace_; }

 private:
  std::vector<EnergyTraceRow> trace_;
};

/// sum_{i=1}^{n-1} ||gamma_{i+1} - 2 gamma_i + gamma_{i-1}||^2
double smoothness_penalty(const DiscretePath& path);

/// sum_{i=1}^{n-1} max(0, ||gamma_i - gamma_n|| - ||gamma_{i-1} - gamma_n||)
double monotonicity_penalty(const DiscretePath& path);

/// Total regularized discrete energy at noise level cfg.t_noise. Requires cfg.lambda to be set.
EnergyReport discrete_energy(const DiscretePath& path, const ScoreField& field, const GeodesicConfig& cfg);

struct EnergyGradient {
  EnergyReport energy;
  /// d E_total / d gamma_i for i = 1..n-1 (index 0 is gamma_1).
  std::vector<Vec> grads;
  /// s(gamma_i) for i = 1..n-1, the metric at each interior node.
  std::vector<Vec> node_scores;
};

EnergyGradient energy_and_gradient(const DiscretePath& path, const ScoreField& field,
                                   const GeodesicConfig& cfg);

/// g(x)^{-1} grad via Sherman-Morrison.
Vec riemannian_gradient(const Vec& euclid_grad, const SteinMetric& m);

/// momentum - 0.5 <momentum, D>_g D with D = x_new - x_old.
Vec parallel_transport(const Vec& momentum, const Vec& x_old, const Vec& x_new, const SteinMetric& m);

struct AdamState {
  std::vector<Vec> m;
  std::vector<Vec> v;
  int step = 0;

  static AdamState zeros(std::size_t n_interior, Eigen::Index dim);
};

/// One Riemannian Adam update of every interior point; endpoints untouched.
/// grads and node_scores are indexed like EnergyGradient.
void riemannian_adam_step(DiscretePath& path, std::span<const Vec> grads,
                          std::span<const Vec> node_scores, AdamState& state, const GeodesicConfig& cfg);

/// lambda_scale / median ||s||^2 over the energy's score evaluation points.
double auto_lambda(const DiscretePath& path, const ScoreField& field, const GeodesicConfig& cfg);

struct OptimizeResult {
  DiscretePath path;
  std::vector<EnergyTraceRow> trace;
  EnergyReport initial_energy;
  EnergyReport final_energy;
  int iterations = 0;
  bool converged = false;
};

/// Stage (iii) on its own: Riemannian Adam from `init` until convergence or max_iters.
/// Returns the lowest-energy iterate seen. cfg.lambda must be set.
OptimizeResult optimize_path(DiscretePath init, const ScoreField& field, const GeodesicConfig& cfg);

struct GeodesicResult {
  DiscretePath noisy;
  DiscretePath denoised;
  std::vector<EnergyTraceRow> trace;
  EnergyReport initial_energy;
  EnergyReport final_energy;
  Vec noise;
  double lambda = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Noise both endpoints with one shared eps, optimize the linear initialization in noisy space,
/// then denoise the interior and restore the clean endpoints.
GeodesicResult solve_geodesic(const Vec& xa, const Vec& xb, const ScoreField& field,
                              const NoiseSchedule& sched, const GeodesicConfig& cfg);

/// sum_i sqrt(||v_i||^2 + lambda (s_i^T v_i)^2) at cfg.t_noise. Requires cfg.lambda to be set.
double path_length(const DiscretePath& path, const ScoreField& field, const GeodesicConfig& cfg);

/// Euclidean polyline length.
double polyline_length(std::span<const Vec> points);

/// CSV with header iter,total,data,smooth,mono.
std::string trace_to_csv(std::span<const EnergyTraceRow> trace);

}  // namespace scoregeo
