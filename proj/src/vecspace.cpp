#include "scoregeo/vecspace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "scoregeo/error.hpp"

namespace scoregeo {

void require_same_dim(const Vec& a, const Vec& b, const char* what) {
  if (a.size() != b.size()) {
    throw ArgumentError(std::string(what) + ": dimension mismatch (" + std::to_string(a.size()) +
                        " vs " + std::to_string(b.size()) + ")");
  }
}

bool all_finite(const Vec& v) { return v.allFinite(); }

namespace {

long double dot_ext(const Vec& a, const Vec& b) {
  long double acc = 0.0L;
  for (Eigen::Index i = 0; i < a.size(); ++i) acc += static_cast<long double>(a[i]) * b[i];
  return acc;
}

// x + c s, rounded once per coordinate.
Vec axpy_ext(const Vec& x, long double c, const Vec& s) {
  Vec out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = static_cast<double>(x[i] + c * s[i]);
  return out;
}

}  // namespace

SteinMetric::SteinMetric(Vec s, double lam) : score(std::move(s)), lambda(lam) {
  if (!(lam >= 0.0)) throw ArgumentError("SteinMetric: lambda must be >= 0");
}

double metric_inner(const Vec& u, const Vec& v, const SteinMetric& m) {
  require_same_dim(u, v, "metric_inner");
  require_same_dim(u, m.score, "metric_inner");
  return u.dot(v) + m.lambda * (m.score.dot(u) * m.score.dot(v));
}

double metric_norm_sq(const Vec& v, const SteinMetric& m) {
  require_same_dim(v, m.score, "metric_norm_sq");
  const double sv = m.score.dot(v);
  return v.squaredNorm() + m.lambda * sv * sv;
}

Vec metric_apply(const Vec& v, const SteinMetric& m) {
  require_same_dim(v, m.score, "metric_apply");
  return axpy_ext(v, m.lambda * dot_ext(m.score, v), m.score);
}

Vec metric_inverse_apply(const Vec& b, const SteinMetric& m) {
  require_same_dim(b, m.score, "metric_inverse_apply");
  const long double lam = m.lambda;
  const long double denom = 1.0L + lam * dot_ext(m.score, m.score);
  return axpy_ext(b, -lam * dot_ext(m.score, b) / denom, m.score);
}

MetricValidityReport metric_validity_check(const SteinMetric& m, std::int64_t trials,
                                           std::uint64_t rng_seed) {
  if (trials < 1) throw ArgumentError("metric_validity_check: trials must be >= 1");
  MetricValidityReport rep;
  rep.trials = trials;
  rep.worst_pd_slack = std::numeric_limits<double>::infinity();
  rep.min_norm_sq = std::numeric_limits<double>::infinity();

  std::mt19937_64 rng(rng_seed);
  std::normal_distribution<double> normal;
  const auto n = m.dim();
  Vec u(n), v(n);
  for (std::int64_t k = 0; k < trials; ++k) {
    do {
      for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(rng);
    } while (v.squaredNorm() == 0.0);
    for (Eigen::Index i = 0; i < n; ++i) u[i] = normal(rng);

    const double nsq = v.squaredNorm();
    const double quad = metric_norm_sq(v, m);
    rep.min_norm_sq = std::min(rep.min_norm_sq, nsq);
    rep.worst_pd_slack = std::min(rep.worst_pd_slack, (quad - nsq) / nsq);
    if (!(quad >= nsq) || !(quad > 0.0)) {
      rep.passed = false;
      if (rep.failure.empty()) rep.failure = "positive-definiteness violated at trial " + std::to_string(k);
    }

    const double uv = metric_inner(u, v, m);
    const double vu = metric_inner(v, u, m);
    const double scale =
        std::max(1.0, std::abs(u.dot(v)) + m.lambda * std::abs(m.score.dot(u) * m.score.dot(v)));
    const double sym = std::abs(uv - vu) / scale;
    rep.worst_symmetry_error = std::max(rep.worst_symmetry_error, sym);
    if (sym > 1e-12) {
      rep.passed = false;
      if (rep.failure.empty()) rep.failure = "symmetry violated at trial " + std::to_string(k);
    }
  }
  return rep;
}

}  // namespace scoregeo
