#pragma once

#include <vector>

#include "scoregeo/schedule.hpp"
#include "scoregeo/scorefield.hpp"
#include "scoregeo/vecspace.hpp"

namespace scoregeo {

/// sqrt(abar_t) x0 + sqrt(1 - abar_t) eps
Vec forward_noise(const Vec& x0, const Vec& eps, int t, const NoiseSchedule& sched);

/// score = -eps_hat / sigma_t. Throws ArgumentError at t = 0.
Vec eps_to_score(const Vec& eps_hat, int t, const NoiseSchedule& sched);
Vec score_to_eps(const Vec& score, int t, const NoiseSchedule& sched);

/// Posterior-mean clean point (xt + (1 - abar_t) score) / sqrt(abar_t).
Vec tweedie_x0(const Vec& xt, const Vec& score, int t, const NoiseSchedule& sched);

/// Decreasing timestep ladder t = l_0 > l_1 > ... > l_k = 0 with at most `steps` intervals.
std::vector<int> denoise_ladder(int t, int steps);

/// Deterministic reverse trajectory from t to 0.
///
/// At every rung the noise estimate eps_hat = -sigma_t s(x_t) and the Tweedie estimate x0_hat
/// are formed, then x is re-projected to the next rung as sqrt(abar') x0_hat + sigma' eps_hat.
/// Returns the final x0_hat; t = 0 returns xt unchanged.
Vec denoise_to_zero(const Vec& xt, int t, const ScoreField& field, const NoiseSchedule& sched,
                    int steps = 20);

}  // namespace scoregeo
