#include "scoregeo/pathnav.hpp"

#include <algorithm>
#include <cmath>

#include "scoregeo/diffusion.hpp"

namespace scoregeo {

void ExtrapConfig::validate() const {
  if (!(epsilon_guide >= 0.0 && epsilon_guide <= 1.0)) throw ArgumentError("ExtrapConfig: epsilon_guide must be in [0, 1]");
  if (!(beta_momentum >= 0.0 && beta_momentum <= 1.0)) throw ArgumentError("ExtrapConfig: beta_momentum must be in [0, 1]");
  if (step_size && !(*step_size > 0.0)) throw ArgumentError("ExtrapConfig: step_size must be > 0");
  if (num_steps < 0) throw ArgumentError("ExtrapConfig: num_steps must be >= 0");
  if (init_window < 1) throw ArgumentError("ExtrapConfig: init_window must be >= 1");
  if (!(init_decay > 0.0)) throw ArgumentError("ExtrapConfig: init_decay must be > 0");
}

InterpolationResult interpolate(const Vec& p, const Vec& q, const ScoreField& field, const NoiseSchedule& sched,
                                const GeodesicConfig& cfg) {
  GeodesicResult g = solve_geodesic(p, q, field, sched, cfg);
  std::vector<Vec> frames = geodesic_frames(g, p, q);
  return {std::move(frames), std::move(g.noisy), std::move(g.trace), "geodesic"};
}

std::vector<Vec> geodesic_frames(const GeodesicResult& g, const Vec& p, const Vec& q) {
  if (p == q) return std::vector<Vec>(g.denoised.size(), p);
  std::vector<Vec> frames = g.denoised.points();
  frames.front() = p;
  frames.back() = q;
  return frames;
}

Vec lerp(const Vec& p, const Vec& q, double tau) {
  require_same_dim(p, q, "lerp");
  return (1.0 - tau) * p + tau * q;
}

Vec slerp(const Vec& p, const Vec& q, double tau) {
  require_same_dim(p, q, "slerp");
  const double np = p.norm();
  const double nq = q.norm();
  if (np == 0.0 || nq == 0.0) throw ArgumentError("slerp: zero-norm input");
  if (tau == 0.0) return p;
  if (tau == 1.0) return q;
  const Vec up = p / np;
  const Vec uq = q / nq;
  const double c = std::clamp(up.dot(uq), -1.0, 1.0);
  if (c <= -1.0 + 1e-12) throw ArgumentError("slerp: antipodal inputs have no unique arc");
  const double theta = std::acos(c);
  const double radius = (1.0 - tau) * np + tau * nq;
  Vec dir;
  if (theta < 1e-12) {
    dir = up;
  } else {
    const double st = std::sin(theta);
    dir = (std::sin((1.0 - tau) * theta) / st) * up + (std::sin(tau * theta) / st) * uq;
    dir.normalize();
  }
  return radius * dir;
}

std::vector<Vec> lerp_frames(const Vec& p, const Vec& q, int n_segments) {
  if (n_segments < 1) throw ArgumentError("lerp_frames: n_segments must be >= 1");
  std::vector<Vec> f;
  for (int i = 0; i <= n_segments; ++i) f.push_back(lerp(p, q, static_cast<double>(i) / n_segments));
  f.front() = p;
  f.back() = q;
  return f;
}

std::vector<Vec> slerp_frames(const Vec& p, const Vec& q, int n_segments, const Vec& center) {
  if (n_segments < 1) throw ArgumentError("slerp_frames: n_segments must be >= 1");
  std::vector<Vec> f;
  for (int i = 0; i <= n_segments; ++i) {
    f.push_back(center + slerp(p - center, q - center, static_cast<double>(i) / n_segments));
  }
  f.front() = p;
  f.back() = q;
  return f;
}

double mean_segment_length(const DiscretePath& path) {
  return polyline_length(path.points()) / path.segments();
}

Vec initial_direction(const DiscretePath& path, const ExtrapConfig& cfg, double step) {
  const int n = path.segments();
  const int window = std::max(1, std::min(cfg.init_window, n / 4));
  Vec m = Vec::Zero(path.dim());
  double wsum = 0.0;
  double w = 1.0;
  for (int i = 1; i <= window; ++i) {
    m += w * (path[static_cast<std::size_t>(n - i + 1)] - path[static_cast<std::size_t>(n - i)]);
    wsum += w;
    w *= cfg.init_decay;
  }
  m /= wsum;
  const double nm = m.norm();
  if (!(nm > 0.0)) throw DegenerateDirectionError("extrapolate: trailing path segments have zero net direction");
  return m * (step / nm);
}

namespace {

double resolve_step(const DiscretePath& path, const ExtrapConfig& cfg) {
  return cfg.step_size ? *cfg.step_size : mean_segment_length(path);
}

}  // namespace

std::vector<Vec> extrapolate(const DiscretePath& path, const ScoreField& field, int t, const ExtrapConfig& cfg) {
  cfg.validate();
  std::vector<Vec> out;
  if (cfg.num_steps == 0) return out;
  const double step = resolve_step(path, cfg);
  Vec m = initial_direction(path, cfg, step);
  Vec x = path.back();
  const double eps = cfg.epsilon_guide;
  const double beta = cfg.beta_momentum;
  for (int k = 0; k < cfg.num_steps; ++k) {
    Vec d = (1.0 - eps) * m;
    if (eps != 0.0) {
      const Vec s = field.score(x, t);
      if (!s.allFinite()) throw EvaluationError("extrapolate: non-finite score at step " + std::to_string(k));
      d += eps * s;
    }
    const double nd = d.norm();
    if (!(nd > 0.0)) throw DegenerateDirectionError("extrapolate: direction vanished at step " + std::to_string(k));
    d *= step / nd;
    x += d;
    m = beta * m + (1.0 - beta) * d;
    out.push_back(x);
  }
  return out;
}

std::vector<Vec> linear_continuation(const DiscretePath& path, const ExtrapConfig& cfg) {
  cfg.validate();
  std::vector<Vec> out;
  if (cfg.num_steps == 0) return out;
  const Vec m = initial_direction(path, cfg, resolve_step(path, cfg));
  for (int k = 1; k <= cfg.num_steps; ++k) out.push_back(path.back() + static_cast<double>(k) * m);
  return out;
}

ExtrapolationResult extrapolate_after_geodesic(const Vec& p, const Vec& q, const ScoreField& field,
                                               const NoiseSchedule& sched, const GeodesicConfig& gcfg,
                                               const ExtrapConfig& ecfg) {
  ecfg.validate();
  ExtrapolationResult r{solve_geodesic(p, q, field, sched, gcfg), {}, {}, 0.0};
  if (ecfg.num_steps == 0) return r;
  r.step_size = resolve_step(r.geodesic.noisy, ecfg);
  r.noisy_continuation = extrapolate(r.geodesic.noisy, field, gcfg.t_noise, ecfg);
  for (const auto& x : r.noisy_continuation) {
    r.frames.push_back(denoise_to_zero(x, gcfg.t_noise, field, sched, gcfg.denoise_steps));
  }
  return r;
}

}  // namespace scoregeo
