#include "scoregeo/scorefield.hpp"

#include <cmath>
#include <numbers>

#include "scoregeo/error.hpp"

namespace scoregeo {

namespace {

// Isotropic mixture sum_j exp(log_w_j) N(x; mu_j, v_j I), evaluated in the log domain.
struct MixtureEval {
  Eigen::MatrixXd diff;  // mu_j - x, one row per component
  Eigen::VectorXd resp;
  double log_density = 0.0;
};

MixtureEval eval_mixture(const Vec& x, const Eigen::MatrixXd& means, const Eigen::VectorXd& log_w,
                         const Eigen::VectorXd& var, bool with_normalizer) {
  if (x.size() != means.cols()) {
    throw ArgumentError("mixture score: dimension mismatch (" + std::to_string(x.size()) + " vs " +
                        std::to_string(means.cols()) + ")");
  }
  MixtureEval ev;
  ev.diff = means.rowwise() - x.transpose();
  const double half_n = 0.5 * static_cast<double>(x.size());
  Eigen::VectorXd ll = log_w - 0.5 * (ev.diff.rowwise().squaredNorm().array() / var.array()).matrix();
  if (with_normalizer) {
    ll.array() -= half_n * (2.0 * std::numbers::pi * var.array()).log();
  }
  const double mx = ll.maxCoeff();
  ev.resp = (ll.array() - mx).exp().matrix();
  const double z = ev.resp.sum();
  ev.resp /= z;
  ev.log_density = mx + std::log(z);
  return ev;
}

Vec mixture_score(const MixtureEval& ev, const Eigen::VectorXd& var) {
  return ev.diff.transpose() * (ev.resp.array() / var.array()).matrix();
}

// Hessian of log p applied to u: -sum r_j u / v_j + sum r_j s_j (s_j^T u) - s (s^T u).
Vec mixture_hessian_apply(const MixtureEval& ev, const Eigen::VectorXd& var, const Vec& u) {
  const Vec s = mixture_score(ev, var);
  const Eigen::VectorXd proj = (ev.diff * u).array() / var.array();  // s_j^T u
  const Eigen::VectorXd coef = ev.resp.array() * proj.array() / var.array();
  const double diag = (ev.resp.array() / var.array()).sum();
  return -diag * u + ev.diff.transpose() * coef - s * s.dot(u);
}

}  // namespace

Vec score_gaussian(const Vec& x, const Vec& mean, double variance) {
  if (!(variance > 0.0)) throw ArgumentError("score_gaussian: variance must be > 0");
  require_same_dim(x, mean, "score_gaussian");
  return (mean - x) / variance;
}

Vec score_gmm(const Vec& x, std::span<const MixtureComponent> components) {
  return GaussianMixtureField(std::vector<MixtureComponent>(components.begin(), components.end()))
      .score(x, 0);
}

Vec score_empirical_diffusion(const Vec& x, const Dataset& data, int t, const NoiseSchedule& sched) {
  return EmpiricalDiffusionField(data, sched).score(x, t);
}

Vec score_fd_oracle(const Vec& x, const LogDensityFn& log_density, double h) {
  if (!(h > 0.0)) throw ArgumentError("score_fd_oracle: h must be > 0");
  Vec g(x.size());
  Vec xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    xp[i] = xi + h;
    const double fp = log_density(xp);
    xp[i] = xi - h;
    const double fm = log_density(xp);
    xp[i] = xi;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw EvaluationError("score_fd_oracle: non-finite log density near coordinate " +
                            std::to_string(i));
    }
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

Vec ScoreField::jacobian_transpose_apply(const Vec&, int, const Vec&) const {
  throw ArgumentError("score field '" + kind() + "' has no analytic Jacobian");
}

// ---------------------------------------------------------------------------

Vec ZeroField::score(const Vec& x, int) const {
  if (x.size() != dim_) throw ArgumentError("ZeroField: dimension mismatch");
  return Vec::Zero(dim_);
}
double ZeroField::log_density(const Vec&, int) const { return 0.0; }
Vec ZeroField::jacobian_transpose_apply(const Vec&, int, const Vec& u) const {
  return Vec::Zero(u.size());
}

// ---------------------------------------------------------------------------

IsotropicGaussianField::IsotropicGaussianField(Vec mean, double variance,
                                               std::optional<NoiseSchedule> sched)
    : mean_(std::move(mean)), variance_(variance), sched_(std::move(sched)) {
  if (!(variance_ > 0.0)) throw ArgumentError("IsotropicGaussianField: variance must be > 0");
  if (mean_.size() < 1 || !mean_.allFinite()) {
    throw ArgumentError("IsotropicGaussianField: mean must be non-empty and finite");
  }
}

std::pair<Vec, double> IsotropicGaussianField::at(int t) const {
  if (!sched_) return {mean_, variance_};
  const double ab = sched_->alpha_bar(t);
  return {std::sqrt(ab) * mean_, ab * variance_ + (1.0 - ab)};
}

Vec IsotropicGaussianField::score(const Vec& x, int t) const {
  auto [m, v] = at(t);
  return score_gaussian(x, m, v);
}

double IsotropicGaussianField::log_density(const Vec& x, int t) const {
  auto [m, v] = at(t);
  require_same_dim(x, m, "IsotropicGaussianField::log_density");
  return -0.5 * (x - m).squaredNorm() / v;
}

Vec IsotropicGaussianField::jacobian_transpose_apply(const Vec&, int t, const Vec& u) const {
  return -u / at(t).second;
}

// ---------------------------------------------------------------------------

GaussianMixtureField::GaussianMixtureField(std::vector<MixtureComponent> components,
                                           std::optional<NoiseSchedule> sched)
    : sched_(std::move(sched)) {
  if (components.empty()) throw ArgumentError("GaussianMixtureField: empty component list");
  const auto n = components.front().mean.size();
  if (n < 1) throw ArgumentError("GaussianMixtureField: zero-dimensional mean");
  const auto k = static_cast<Eigen::Index>(components.size());
  means_.resize(k, n);
  log_weights_.resize(k);
  variances_.resize(k);
  double wsum = 0.0;
  for (Eigen::Index j = 0; j < k; ++j) {
    const auto& c = components[static_cast<std::size_t>(j)];
    if (c.mean.size() != n) throw ArgumentError("GaussianMixtureField: ragged component means");
    if (!(c.weight > 0.0)) throw ArgumentError("GaussianMixtureField: weights must be positive");
    if (!(c.variance > 0.0)) throw ArgumentError("GaussianMixtureField: variances must be > 0");
    means_.row(j) = c.mean.transpose();
    log_weights_[j] = std::log(c.weight);
    variances_[j] = c.variance;
    wsum += c.weight;
  }
  if (std::abs(wsum - 1.0) > 1e-12) {
    throw ArgumentError("GaussianMixtureField: weights must sum to 1 (got " + std::to_string(wsum) + ")");
  }
}

GaussianMixtureField::Params GaussianMixtureField::at(int t) const {
  if (!sched_) return {means_, variances_};
  const double ab = sched_->alpha_bar(t);
  return {std::sqrt(ab) * means_, (ab * variances_.array() + (1.0 - ab)).matrix()};
}

Vec GaussianMixtureField::score(const Vec& x, int t) const {
  const auto p = at(t);
  return mixture_score(eval_mixture(x, p.means, log_weights_, p.variances, true), p.variances);
}

double GaussianMixtureField::log_density(const Vec& x, int t) const {
  const auto p = at(t);
  return eval_mixture(x, p.means, log_weights_, p.variances, true).log_density;
}

Vec GaussianMixtureField::jacobian_transpose_apply(const Vec& x, int t, const Vec& u) const {
  const auto p = at(t);
  return mixture_hessian_apply(eval_mixture(x, p.means, log_weights_, p.variances, true),
                               p.variances, u);
}

Eigen::VectorXd GaussianMixtureField::responsibilities(const Vec& x, int t) const {
  const auto p = at(t);
  return eval_mixture(x, p.means, log_weights_, p.variances, true).resp;
}

// ---------------------------------------------------------------------------

EmpiricalDiffusionField::EmpiricalDiffusionField(Dataset data, NoiseSchedule sched,
                                                 double variance_scale)
    : data_(std::move(data)), sched_(std::move(sched)), variance_scale_(variance_scale) {
  data_.validate();
  if (!(variance_scale_ > 0.0)) throw ArgumentError("EmpiricalDiffusionField: variance_scale must be > 0");
}

double EmpiricalDiffusionField::kernel_variance(int t) const {
  const double ab = sched_.alpha_bar(t);
  if (!(ab < 1.0)) {
    throw ArgumentError("empirical diffusion score: noise-free timestep t=" + std::to_string(t) +
                        " (alpha_bar = 1)");
  }
  return (1.0 - ab) * variance_scale_;
}

namespace {

struct EmpiricalParams {
  Eigen::MatrixXd means;
  Eigen::VectorXd log_w;
  Eigen::VectorXd var;
};

EmpiricalParams empirical_params(const Dataset& data, double alpha_bar, double kernel_var) {
  const Eigen::Index m = data.size();
  return {std::sqrt(alpha_bar) * data.points,
          Eigen::VectorXd::Constant(m, -std::log(static_cast<double>(m))),
          Eigen::VectorXd::Constant(m, kernel_var)};
}

}  // namespace

Vec EmpiricalDiffusionField::score(const Vec& x, int t) const {
  const auto p = empirical_params(data_, sched_.alpha_bar(t), kernel_variance(t));
  return mixture_score(eval_mixture(x, p.means, p.log_w, p.var, false), p.var);
}

double EmpiricalDiffusionField::log_density(const Vec& x, int t) const {
  const auto p = empirical_params(data_, sched_.alpha_bar(t), kernel_variance(t));
  return eval_mixture(x, p.means, p.log_w, p.var, false).log_density;
}

Vec EmpiricalDiffusionField::jacobian_transpose_apply(const Vec& x, int t, const Vec& u) const {
  const auto p = empirical_params(data_, sched_.alpha_bar(t), kernel_variance(t));
  return mixture_hessian_apply(eval_mixture(x, p.means, p.log_w, p.var, false), p.var, u);
}

Eigen::VectorXd EmpiricalDiffusionField::responsibilities(const Vec& x, int t) const {
  const auto p = empirical_params(data_, sched_.alpha_bar(t), kernel_variance(t));
  return eval_mixture(x, p.means, p.log_w, p.var, false).resp;
}

// ---------------------------------------------------------------------------

FiniteDifferenceField::FiniteDifferenceField(TimedLogDensity log_density, Eigen::Index dim, double h)
    : log_density_(std::move(log_density)), dim_(dim), h_(h) {
  if (!(h_ > 0.0)) throw ArgumentError("FiniteDifferenceField: h must be > 0");
}

Vec FiniteDifferenceField::score(const Vec& x, int t) const {
  if (x.size() != dim_) throw ArgumentError("FiniteDifferenceField: dimension mismatch");
  return score_fd_oracle(
      x, [&](const Vec& y) { return log_density_(y, t); }, h_);
}

}  // namespace scoregeo
