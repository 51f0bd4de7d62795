#include "scoregeo/diffusion.hpp"

#include <cmath>

#include "scoregeo/error.hpp"

namespace scoregeo {

Vec forward_noise(const Vec& x0, const Vec& eps, int t, const NoiseSchedule& sched) {
  sched.check_timestep(t, "forward_noise");
  require_same_dim(x0, eps, "forward_noise");
  const double ab = sched.alpha_bar(t);
  return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * eps;
}

Vec eps_to_score(const Vec& eps_hat, int t, const NoiseSchedule& sched) {
  sched.check_timestep(t, "eps_to_score");
  if (t == 0) throw ArgumentError("eps_to_score: sigma_0 = 0, division by zero");
  return -eps_hat / sched.sigma(t);
}

Vec score_to_eps(const Vec& score, int t, const NoiseSchedule& sched) {
  sched.check_timestep(t, "score_to_eps");
  if (t == 0) throw ArgumentError("score_to_eps: sigma_0 = 0");
  return -sched.sigma(t) * score;
}

Vec tweedie_x0(const Vec& xt, const Vec& score, int t, const NoiseSchedule& sched) {
  sched.check_timestep(t, "tweedie_x0");
  if (t == 0) throw ArgumentError("tweedie_x0: t = 0 is already clean");
  require_same_dim(xt, score, "tweedie_x0");
  const double ab = sched.alpha_bar(t);
  return (xt + (1.0 - ab) * score) / std::sqrt(ab);
}

std::vector<int> denoise_ladder(int t, int steps) {
  if (steps < 1) throw ArgumentError("denoise_ladder: steps must be >= 1");
  if (t < 0) throw ArgumentError("denoise_ladder: negative timestep");
  std::vector<int> ladder{t};
  for (int k = 1; k <= steps; ++k) {
    const int next = static_cast<int>(std::lround(static_cast<double>(t) * (steps - k) / steps));
    if (next < ladder.back()) ladder.push_back(next);
  }
  return ladder;
}

Vec denoise_to_zero(const Vec& xt, int t, const ScoreField& field, const NoiseSchedule& sched,
                    int steps) {
  sched.check_timestep(t, "denoise_to_zero");
  if (t == 0) return xt;
  const auto ladder = denoise_ladder(t, steps);
  Vec x = xt;
  Vec x0;
  for (std::size_t k = 0; k + 1 < ladder.size(); ++k) {
    const int cur = ladder[k];
    const int next = ladder[k + 1];
    const Vec s = field.score(x, cur);
    if (!s.allFinite()) {
      throw EvaluationError("denoise_to_zero: non-finite score at t=" + std::to_string(cur));
    }
    const Vec eps_hat = score_to_eps(s, cur, sched);
    x0 = tweedie_x0(x, s, cur, sched);
    if (next > 0) x = forward_noise(x0, eps_hat, next, sched);
  }
  return x0;
}

}  // namespace scoregeo
