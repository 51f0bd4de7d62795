#include "scoregeo/geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include "scoregeo/diffusion.hpp"

namespace scoregeo {

DiscretePath::DiscretePath(std::vector<Vec> points) : pts_(std::move(points)) {
  if (pts_.size() < 2) throw ArgumentError("DiscretePath: need at least two points");
  const auto n = pts_.front().size();
  if (n < 1) throw ArgumentError("DiscretePath: zero-dimensional points");
  for (std::size_t i = 0; i < pts_.size(); ++i) {
    if (pts_[i].size() != n) throw ArgumentError("DiscretePath: point " + std::to_string(i) + " has wrong dimension");
    if (!pts_[i].allFinite()) throw ArgumentError("DiscretePath: point " + std::to_string(i) + " is not finite");
  }
}

DiscretePath DiscretePath::linear(const Vec& a, const Vec& b, int n_segments) {
  if (n_segments < 1) throw ArgumentError("DiscretePath::linear: n_segments must be >= 1");
  require_same_dim(a, b, "DiscretePath::linear");
  std::vector<Vec> pts;
  pts.reserve(static_cast<std::size_t>(n_segments) + 1);
  pts.push_back(a);
  for (int i = 1; i < n_segments; ++i) {
    const double tau = static_cast<double>(i) / n_segments;
    pts.push_back((1.0 - tau) * a + tau * b);
  }
  pts.push_back(b);
  return DiscretePath(std::move(pts));
}

void DiscretePath::set_interior(std::size_t i, Vec v) { interior(i) = std::move(v); }

Vec& DiscretePath::interior(std::size_t i) {
  if (i == 0 || i + 1 >= pts_.size()) {
    throw ArgumentError("DiscretePath: index " + std::to_string(i) + " is not an interior point");
  }
  return pts_[i];
}

// ---------------------------------------------------------------------------

void GeodesicConfig::validate() const {
  if (lambda && !(*lambda >= 0.0)) throw ArgumentError("GeodesicConfig: lambda must be >= 0");
  if (!(lambda_scale >= 0.0)) throw ArgumentError("GeodesicConfig: lambda_scale must be >= 0");
  if (n_segments < 1) throw ArgumentError("GeodesicConfig: n_segments must be >= 1");
  if (t_noise < 0) throw ArgumentError("GeodesicConfig: t_noise must be >= 0");
  if (!(lambda_smooth >= 0.0) || !(lambda_mono >= 0.0)) {
    throw ArgumentError("GeodesicConfig: regularizer weights must be >= 0");
  }
  if (max_iters < 0 || patience < 1) throw ArgumentError("GeodesicConfig: max_iters >= 0 and patience >= 1 required");
  if (!(rel_tol > 0.0)) throw ArgumentError("GeodesicConfig: rel_tol must be > 0");
  if (!(adam.alpha > 0.0)) throw ArgumentError("GeodesicConfig: adam alpha must be > 0");
  if (!(adam.beta1 > 0.0 && adam.beta1 < 1.0) || !(adam.beta2 > 0.0 && adam.beta2 < 1.0)) {
    throw ArgumentError("GeodesicConfig: adam betas must lie in (0, 1)");
  }
  if (!(adam.eps > 0.0)) throw ArgumentError("GeodesicConfig: adam eps must be > 0");
  if (denoise_steps < 1) throw ArgumentError("GeodesicConfig: denoise_steps must be >= 1");
}

double GeodesicConfig::resolved_lambda() const {
  if (!lambda) throw ArgumentError("GeodesicConfig: lambda has not been resolved");
  return *lambda;
}

// ---------------------------------------------------------------------------

double smoothness_penalty(const DiscretePath& path) {
  double r = 0.0;
  for (std::size_t i = 1; i + 1 < path.size(); ++i) {
    r += (path[i + 1] - 2.0 * path[i] + path[i - 1]).squaredNorm();
  }
  return r;
}

double monotonicity_penalty(const DiscretePath& path) {
  const Vec& end = path.back();
  double r = 0.0;
  for (std::size_t i = 1; i + 1 < path.size(); ++i) {
    r += std::max(0.0, (path[i] - end).norm() - (path[i - 1] - end).norm());
  }
  return r;
}

namespace {

Vec midpoint(const Vec& a, const Vec& b) { return 0.5 * (a + b); }

// Scores at the energy's evaluation points, one per segment.
std::vector<Vec> segment_scores(const DiscretePath& path, const ScoreField& field, const GeodesicConfig& cfg) {
  std::vector<Vec> s(static_cast<std::size_t>(path.segments()));
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Vec at = cfg.score_at_midpoints ? midpoint(path[i], path[i + 1]) : path[i];
    s[i] = field.score(at, cfg.t_noise);
    if (!s[i].allFinite()) {
      throw EvaluationError("discrete_energy: non-finite score on segment " + std::to_string(i));
    }
  }
  return s;
}

EnergyReport energy_from_scores(const DiscretePath& path, std::span<const Vec> scores, const GeodesicConfig& cfg) {
  const double lam = cfg.resolved_lambda();
  EnergyReport rep;
  rep.segment_energies.resize(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const Vec v = path[i + 1] - path[i];
    const double sv = scores[i].dot(v);
    rep.segment_energies[i] = 0.5 * (v.squaredNorm() + lam * sv * sv);
    rep.data_energy += rep.segment_energies[i];
  }
  rep.smooth_penalty = cfg.lambda_smooth * smoothness_penalty(path);
  rep.mono_penalty = cfg.lambda_mono * monotonicity_penalty(path);
  rep.total = rep.data_energy + rep.smooth_penalty + rep.mono_penalty;
  return rep;
}

}  // namespace

EnergyReport discrete_energy(const DiscretePath& path, const ScoreField& field, const GeodesicConfig& cfg) {
  const auto scores = segment_scores(path, field, cfg);
  return energy_from_scores(path, scores, cfg);
}

EnergyGradient energy_and_gradient(const DiscretePath& path, const ScoreField& field,
                                   const GeodesicConfig& cfg) {
  const double lam = cfg.resolved_lambda();
  const auto n = static_cast<std::size_t>(path.segments());
  const auto dim = path.dim();
  const auto scores = segment_scores(path, field, cfg);

  EnergyGradient out;
  out.energy = energy_from_scores(path, scores, cfg);

  // Full-path gradient buffer; endpoint rows are discarded at the end.
  std::vector<Vec> g(n + 1, Vec::Zero(dim));
  for (std::size_t i = 0; i < n; ++i) {
    const Vec v = path[i + 1] - path[i];
    const double sv = scores[i].dot(v);
    const Vec gv = v + (lam * sv) * scores[i];
    g[i + 1] += gv;
    g[i] -= gv;
    if (cfg.score_jacobian && lam != 0.0 && sv != 0.0) {
      const Vec at = cfg.score_at_midpoints ? midpoint(path[i], path[i + 1]) : path[i];
      const Vec jtv = (lam * sv) * field.jacobian_transpose_apply(at, cfg.t_noise, v);
      if (cfg.score_at_midpoints) {
        g[i] += 0.5 * jtv;
        g[i + 1] += 0.5 * jtv;
      } else {
        g[i] += jtv;
      }
    }
  }
  if (cfg.lambda_smooth != 0.0) {
    for (std::size_t i = 1; i < n; ++i) {
      const Vec d = path[i + 1] - 2.0 * path[i] + path[i - 1];
      const Vec w = (2.0 * cfg.lambda_smooth) * d;
      g[i + 1] += w;
      g[i] -= 2.0 * w;
      g[i - 1] += w;
    }
  }
  if (cfg.lambda_mono != 0.0) {
    const Vec& end = path.back();
    auto unit = [](const Vec& x) -> Vec {
      const double nx = x.norm();
      return nx > 0.0 ? Vec(x / nx) : Vec(Vec::Zero(x.size()));
    };
    for (std::size_t i = 1; i < n; ++i) {
      const Vec a = path[i] - end;
      const Vec b = path[i - 1] - end;
      if (a.norm() - b.norm() > 0.0) {
        g[i] += cfg.lambda_mono * unit(a);
        g[i - 1] -= cfg.lambda_mono * unit(b);
      }
    }
  }

  out.grads.assign(g.begin() + 1, g.end() - 1);
  out.node_scores.resize(n - 1);
  for (std::size_t i = 1; i < n; ++i) {
    if (!cfg.score_at_midpoints) {
      out.node_scores[i - 1] = scores[i];
    } else {
      out.node_scores[i - 1] = field.score(path[i], cfg.t_noise);
      if (!out.node_scores[i - 1].allFinite()) {
        throw EvaluationError("energy_and_gradient: non-finite score at point " + std::to_string(i));
      }
    }
  }
  return out;
}

Vec riemannian_gradient(const Vec& euclid_grad, const SteinMetric& m) {
  return metric_inverse_apply(euclid_grad, m);
}

Vec parallel_transport(const Vec& momentum, const Vec& x_old, const Vec& x_new, const SteinMetric& m) {
  require_same_dim(x_old, x_new, "parallel_transport");
  const Vec delta = x_new - x_old;
  return momentum - (0.5 * metric_inner(momentum, delta, m)) * delta;
}

AdamState AdamState::zeros(std::size_t n_interior, Eigen::Index dim) {
  AdamState s;
  s.m.assign(n_interior, Vec::Zero(dim));
  s.v.assign(n_interior, Vec::Zero(dim));
  return s;
}

void riemannian_adam_step(DiscretePath& path, std::span<const Vec> grads, std::span<const Vec> node_scores,
                          AdamState& state, const GeodesicConfig& cfg) {
  const std::size_t interior = path.size() - 2;
  if (grads.size() != interior || node_scores.size() != interior || state.m.size() != interior ||
      state.v.size() != interior) {
    throw ArgumentError("riemannian_adam_step: gradient/state size does not match the path interior");
  }
  for (std::size_t k = 0; k < interior; ++k) {
    if (!grads[k].allFinite()) {
      throw EvaluationError("riemannian_adam_step: non-finite gradient at point " + std::to_string(k + 1));
    }
  }
  const double lam = cfg.resolved_lambda();
  const auto& a = cfg.adam;
  state.step += 1;
  const double bc1 = 1.0 - std::pow(a.beta1, state.step);
  const double bc2 = 1.0 - std::pow(a.beta2, state.step);
  for (std::size_t k = 0; k < interior; ++k) {
    const SteinMetric metric(node_scores[k], lam);
    const Vec rg = riemannian_gradient(grads[k], metric);
    state.m[k] = a.beta1 * state.m[k] + (1.0 - a.beta1) * rg;
    state.v[k] = a.beta2 * state.v[k] + (1.0 - a.beta2) * rg.cwiseAbs2();
    const Vec m_hat = state.m[k] / bc1;
    const Vec v_hat = state.v[k] / bc2;
    const Vec eta = a.alpha * (m_hat.array() / (v_hat.array().sqrt() + a.eps)).matrix();
    const Vec old = path[k + 1];
    path.interior(k + 1) -= eta;
    if (cfg.transport_momentum) state.m[k] = parallel_transport(state.m[k], old, path[k + 1], metric);
  }
}

double auto_lambda(const DiscretePath& path, const ScoreField& field, const GeodesicConfig& cfg) {
  auto scores = segment_scores(path, field, cfg);
  std::vector<double> sq(scores.size());
  std::transform(scores.begin(), scores.end(), sq.begin(), [](const Vec& s) { return s.squaredNorm(); });
  std::sort(sq.begin(), sq.end());
  const std::size_t k = sq.size();
  const double med = k % 2 ? sq[k / 2] : 0.5 * (sq[k / 2 - 1] + sq[k / 2]);
  // A flat field makes the metric Euclidean whatever lambda is.
  return med > 0.0 ? cfg.lambda_scale / med : cfg.lambda_scale;
}

namespace {

EnergyTraceRow row_of(int iter, const EnergyReport& e) {
  return {iter, e.total, e.data_energy, e.smooth_penalty, e.mono_penalty};
}

}  // namespace

OptimizeResult optimize_path(DiscretePath init, const ScoreField& field, const GeodesicConfig& cfg) {
  cfg.validate();
  cfg.resolved_lambda();
  OptimizeResult res{init, {}, {}, {}, 0, false};
  DiscretePath path = std::move(init);
  const std::size_t interior = path.size() - 2;

  if (interior == 0) {
    res.initial_energy = res.final_energy = discrete_energy(path, field, cfg);
    res.trace.push_back(row_of(0, res.initial_energy));
    res.converged = true;
    return res;
  }

  AdamState state = AdamState::zeros(interior, path.dim());
  double best = std::numeric_limits<double>::infinity();
  double prev = 0.0;
  int stall = 0;
  for (int it = 0;; ++it) {
    EnergyGradient eg = energy_and_gradient(path, field, cfg);
    res.trace.push_back(row_of(it, eg.energy));
    if (!std::isfinite(eg.energy.total)) {
      throw GeodesicDivergence("optimize_path: energy became non-finite at iteration " + std::to_string(it),
                               res.trace);
    }
    if (it == 0) res.initial_energy = eg.energy;
    if (eg.energy.total < best) {
      best = eg.energy.total;
      res.path = path;
      res.final_energy = eg.energy;
    }
    if (it > 0) {
      const double rel = (prev - eg.energy.total) / std::max(prev, 1e-12);
      stall = rel < cfg.rel_tol ? stall + 1 : 0;
      if (stall >= cfg.patience) {
        res.converged = true;
        break;
      }
    }
    if (it >= cfg.max_iters) break;
    prev = eg.energy.total;
    riemannian_adam_step(path, eg.grads, eg.node_scores, state, cfg);
    res.iterations = it + 1;
  }
  return res;
}

GeodesicResult solve_geodesic(const Vec& xa, const Vec& xb, const ScoreField& field, const NoiseSchedule& sched,
                              const GeodesicConfig& cfg) {
  cfg.validate();
  require_same_dim(xa, xb, "solve_geodesic");
  if (!xa.allFinite() || !xb.allFinite()) throw ArgumentError("solve_geodesic: endpoints must be finite");
  sched.check_timestep(cfg.t_noise, "solve_geodesic");

  std::mt19937_64 rng(cfg.rng_seed);
  std::normal_distribution<double> normal;
  Vec eps(xa.size());
  for (Eigen::Index i = 0; i < eps.size(); ++i) eps[i] = normal(rng);

  const Vec pa = forward_noise(xa, eps, cfg.t_noise, sched);
  const Vec pb = forward_noise(xb, eps, cfg.t_noise, sched);
  DiscretePath init = DiscretePath::linear(pa, pb, cfg.n_segments);

  GeodesicConfig run = cfg;
  if (!run.lambda) run.lambda = auto_lambda(init, field, run);

  GeodesicResult out{init, DiscretePath::linear(xa, xb, cfg.n_segments), {}, {}, {}, eps, *run.lambda, 0, false};

  if (xa == xb) {
    // Constant curve: nothing to optimize and nothing to denoise.
    out.initial_energy = out.final_energy = discrete_energy(init, field, run);
    out.trace.push_back(row_of(0, out.initial_energy));
    out.converged = true;
    return out;
  }

  OptimizeResult opt = optimize_path(std::move(init), field, run);
  out.trace = std::move(opt.trace);
  out.initial_energy = opt.initial_energy;
  out.final_energy = opt.final_energy;
  out.iterations = opt.iterations;
  out.converged = opt.converged;

  std::vector<Vec> clean(opt.path.size());
  clean.front() = xa;
  clean.back() = xb;
  for (std::size_t i = 1; i + 1 < clean.size(); ++i) {
    clean[i] = denoise_to_zero(opt.path[i], cfg.t_noise, field, sched, cfg.denoise_steps);
  }
  out.noisy = std::move(opt.path);
  out.denoised = DiscretePath(std::move(clean));
  return out;
}

double path_length(const DiscretePath& path, const ScoreField& field, const GeodesicConfig& cfg) {
  const double lam = cfg.resolved_lambda();
  const auto scores = segment_scores(path, field, cfg);
  double len = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const Vec v = path[i + 1] - path[i];
    const double sv = scores[i].dot(v);
    len += std::sqrt(v.squaredNorm() + lam * sv * sv);
  }
  return len;
}

double polyline_length(std::span<const Vec> points) {
  double len = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) len += (points[i] - points[i - 1]).norm();
  return len;
}

std::string trace_to_csv(std::span<const EnergyTraceRow> trace) {
  std::string out = "iter,total,data,smooth,mono\n";
  char buf[160];
  for (const auto& r : trace) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g\n", r.iter, r.total, r.data, r.smooth, r.mono);
    out += buf;
  }
  return out;
}

}  // namespace scoregeo
