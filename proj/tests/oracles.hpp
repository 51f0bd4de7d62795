#pragma once

// Independent reference computations used by the tests. Nothing here calls into the
// rank-one code paths under test.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline Vec random_vec(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = nd(rng);
  return v;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// The explicit N x N matrix I + lambda s s^T.
inline Mat dense_metric(const Vec& s, double lambda) {
  return Mat::Identity(s.size(), s.size()) + lambda * s * s.transpose();
}

/// (I + lambda s s^T)^{-1} b by a dense extended-precision LU solve.
inline Vec dense_inverse_apply(const Vec& s, double lambda, const Vec& b) {
  using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  using VecL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  const VecL sl = s.cast<long double>();
  const MatL g = MatL::Identity(s.size(), s.size()) + static_cast<long double>(lambda) * sl * sl.transpose();
  const VecL x = g.fullPivLu().solve(b.cast<long double>());
  return x.cast<double>();
}

inline double rel_err(const Vec& got, const Vec& want) {
  const double den = std::max(want.norm(), 1e-300);
  return (got - want).norm() / den;
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

/// Central differences of a scalar function.
inline Vec central_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
  Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

/// log of a weighted isotropic Gaussian mixture, evaluated by brute force with long double.
inline double gmm_log_density(const Vec& x, const std::vector<double>& w, const std::vector<Vec>& mu,
                              const std::vector<double>& var) {
  const double d = static_cast<double>(x.size());
  std::vector<long double> terms;
  long double mx = -INFINITY;
  for (std::size_t j = 0; j < w.size(); ++j) {
    const long double t = std::log(static_cast<long double>(w[j])) -
                          0.5L * (x - mu[j]).squaredNorm() / var[j] - 0.5L * d * std::log(2.0L * M_PI * var[j]);
    terms.push_back(t);
    mx = std::max(mx, t);
  }
  long double acc = 0.0L;
  for (long double t : terms) acc += std::exp(t - mx);
  return static_cast<double>(mx + std::log(acc));
}

/// Energy of a discrete path with a caller-supplied score function, straight from the definition.
struct PathEnergyOracle {
  std::function<Vec(const Vec&)> score;
  double lambda = 1.0;
  double w_smooth = 0.0;
  double w_mono = 0.0;
  bool midpoints = true;

  double operator()(const std::vector<Vec>& g) const {
    const std::size_t n = g.size() - 1;
    double data = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Vec v = g[i + 1] - g[i];
      const Vec s = score(midpoints ? Vec(0.5 * (g[i] + g[i + 1])) : g[i]);
      data += 0.5 * (v.dot(v) + lambda * std::pow(s.dot(v), 2));
    }
    double smooth = 0.0;
    double mono = 0.0;
    for (std::size_t i = 1; i < n; ++i) smooth += (g[i + 1] - 2.0 * g[i] + g[i - 1]).squaredNorm();
    for (std::size_t i = 1; i < n; ++i) {
      mono += std::max(0.0, (g[i] - g[n]).norm() - (g[i - 1] - g[n]).norm());
    }
    return data + w_smooth * smooth + w_mono * mono;
  }
};

/// Plain (Euclidean) Adam on a list of vectors, written independently of the library optimizer.
struct PlainAdam {
  double alpha, beta1, beta2, eps;
  std::vector<Vec> m, v;
  int t = 0;

  void step(std::vector<Vec>& x, const std::vector<Vec>& g) {
    if (m.empty()) {
      for (const auto& gi : g) {
        m.push_back(Vec::Zero(gi.size()));
        v.push_back(Vec::Zero(gi.size()));
      }
    }
    ++t;
    for (std::size_t i = 0; i < x.size(); ++i) {
      m[i] = beta1 * m[i] + (1 - beta1) * g[i];
      v[i] = beta2 * v[i] + (1 - beta2) * g[i].cwiseProduct(g[i]);
      const Vec mh = m[i] / (1 - std::pow(beta1, t));
      const Vec vh = v[i] / (1 - std::pow(beta2, t));
      x[i] -= alpha * mh.cwiseQuotient((vh.array().sqrt() + eps).matrix());
    }
  }
};

}  // namespace oracle
