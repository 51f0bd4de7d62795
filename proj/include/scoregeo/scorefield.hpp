#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scoregeo/dataset.hpp"
#include "scoregeo/schedule.hpp"
#include "scoregeo/vecspace.hpp"

namespace scoregeo {

/// (mean - x) / variance
Vec score_gaussian(const Vec& x, const Vec& mean, double variance);

struct MixtureComponent {
  double weight = 1.0;
  Vec mean;
  double variance = 1.0;
};

/// Exact score of an isotropic Gaussian mixture; responsibilities are log-domain normalized.
Vec score_gmm(const Vec& x, std::span<const MixtureComponent> components);

/// Score of p_t = (1/M) sum_j N(sqrt(abar_t) x_j, (1 - abar_t) I), the noisy empirical distribution.
Vec score_empirical_diffusion(const Vec& x, const Dataset& data, int t, const NoiseSchedule& sched);

using LogDensityFn = std::function<double(const Vec&)>;

/// Central-difference gradient of a log density. Throws EvaluationError on non-finite evaluations.
Vec score_fd_oracle(const Vec& x, const LogDensityFn& log_density, double h = 1e-4);

/// Evaluator x, t -> grad_x log p_t(x).
///
/// Implementations are immutable after construction and safe to evaluate concurrently.
class ScoreField {
 public:
  virtual ~ScoreField() = default;

  virtual std::string kind() const = 0;
  virtual Eigen::Index dimension() const = 0;
  virtual Vec score(const Vec& x, int t) const = 0;

  /// log p_t(x) up to an additive constant independent of x.
  virtual double log_density(const Vec& x, int t) const = 0;

  /// Whether jacobian_transpose_apply is available.
  virtual bool has_jacobian() const { return false; }

  /// J(x)^T u where J is the Jacobian of score(., t) at x.
  virtual Vec jacobian_transpose_apply(const Vec& x, int t, const Vec& u) const;
};

using ScoreFieldPtr = std::shared_ptr<const ScoreField>;

/// s = 0 everywhere (flat density).
class ZeroField final : public ScoreField {
 public:
  explicit ZeroField(Eigen::Index dim) : dim_(dim) {}
  std::string kind() const override { return "zero"; }
  Eigen::Index dimension() const override { return dim_; }
  Vec score(const Vec& x, int t) const override;
  double log_density(const Vec& x, int t) const override;
  bool has_jacobian() const override { return true; }
  Vec jacobian_transpose_apply(const Vec& x, int t, const Vec& u) const override;

 private:
  Eigen::Index dim_;
};

/// N(mean, variance I); with a schedule the field at t is the diffused N(sqrt(abar) mean, abar var + 1 - abar).
class IsotropicGaussianField final : public ScoreField {
 public:
  IsotropicGaussianField(Vec mean, double variance, std::optional<NoiseSchedule> sched = std::nullopt);
  std::string kind() const override { return "isotropic_gaussian"; }
  Eigen::Index dimension() const override { return mean_.size(); }
  Vec score(const Vec& x, int t) const override;
  double log_density(const Vec& x, int t) const override;
  bool has_jacobian() const override { return true; }
  Vec jacobian_transpose_apply(const Vec& x, int t, const Vec& u) const override;

  const Vec& mean() const { return mean_; }
  double variance() const { return variance_; }

 private:
  std::pair<Vec, double> at(int t) const;
  Vec mean_;
  double variance_;
  std::optional<NoiseSchedule> sched_;
};

/// Isotropic Gaussian mixture, optionally diffused through a schedule.
class GaussianMixtureField final : public ScoreField {
 public:
  GaussianMixtureField(std::vector<MixtureComponent> components,
                       std::optional<NoiseSchedule> sched = std::nullopt);
  std::string kind() const override { return "gaussian_mixture"; }
  Eigen::Index dimension() const override { return means_.cols(); }
  Vec score(const Vec& x, int t) const override;
  double log_density(const Vec& x, int t) const override;
  bool has_jacobian() const override { return true; }
  Vec jacobian_transpose_apply(const Vec& x, int t, const Vec& u) const override;

  /// Posterior responsibilities r_j(x) at t.
  Eigen::VectorXd responsibilities(const Vec& x, int t) const;

 private:
  struct Params {
    Eigen::MatrixXd means;
    Eigen::VectorXd variances;
  };
  Params at(int t) const;
  Eigen::MatrixXd means_;
  Eigen::VectorXd log_weights_;
  Eigen::VectorXd variances_;
  std::optional<NoiseSchedule> sched_;
};

/// Exact score of the dataset convolved with the forward-noise kernel at t (requires abar_t < 1).
///
/// variance_scale multiplies the kernel variance; values other than 1 give a deliberately
/// mis-specified density and exist for negative-control checks.
class EmpiricalDiffusionField final : public ScoreField {
 public:
  EmpiricalDiffusionField(Dataset data, NoiseSchedule sched, double variance_scale = 1.0);
  std::string kind() const override { return "empirical_diffusion"; }
  Eigen::Index dimension() const override { return data_.dimension(); }
  Vec score(const Vec& x, int t) const override;
  double log_density(const Vec& x, int t) const override;
  bool has_jacobian() const override { return true; }
  Vec jacobian_transpose_apply(const Vec& x, int t, const Vec& u) const override;

  Eigen::VectorXd responsibilities(const Vec& x, int t) const;
  const Dataset& data() const { return data_; }
  const NoiseSchedule& schedule() const { return sched_; }

 private:
  double kernel_variance(int t) const;
  Dataset data_;
  NoiseSchedule sched_;
  double variance_scale_;
};

/// Score obtained by central differences of a user-supplied log density.
class FiniteDifferenceField final : public ScoreField {
 public:
  using TimedLogDensity = std::function<double(const Vec&, int)>;
  FiniteDifferenceField(TimedLogDensity log_density, Eigen::Index dim, double h = 1e-4);
  std::string kind() const override { return "finite_difference_oracle"; }
  Eigen::Index dimension() const override { return dim_; }
  Vec score(const Vec& x, int t) const override;
  double log_density(const Vec& x, int t) const override { return log_density_(x, t); }

 private:
  TimedLogDensity log_density_;
  Eigen::Index dim_;
  double h_;
};

}  // namespace scoregeo
