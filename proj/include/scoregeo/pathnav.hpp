#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scoregeo/geodesic.hpp"

namespace scoregeo {

struct ExtrapConfig {
  /// Weight of the score in the step direction.
  double epsilon_guide = 0.3;
  /// EMA weight on the previous momentum.
  double beta_momentum = 0.9;
  /// Step length; unset means the mean segment length of the input path.
  std::optional<double> step_size;
  int num_steps = 5;
  /// Number of trailing segments averaged for the initial direction (capped at n/4).
  int init_window = 3;
  /// Segment i from the end gets weight init_decay^(i-1).
  double init_decay = 0.5;

  void validate() const;
};

struct InterpolationResult {
  std::vector<Vec> frames;
  DiscretePath noisy;
  std::vector<EnergyTraceRow> trace;
  std::string method;
};

/// Geodesic interpolation: noisy-space geodesic, denoised interior, original clean endpoints.
InterpolationResult interpolate(const Vec& p, const Vec& q, const ScoreField& field, const NoiseSchedule& sched,
                                const GeodesicConfig& cfg);

/// Clean frames of a solved geodesic: the denoised interior between p and q, or p repeated when p == q.
std::vector<Vec> geodesic_frames(const GeodesicResult& g, const Vec& p, const Vec& q);

Vec lerp(const Vec& p, const Vec& q, double tau);

/// Constant angular rate between the directions of p and q, norms interpolated linearly.
/// Zero or antipodal inputs raise ArgumentError.
Vec slerp(const Vec& p, const Vec& q, double tau);

/// n_segments + 1 frames of lerp/slerp between p and q.
std::vector<Vec> lerp_frames(const Vec& p, const Vec& q, int n_segments);
std::vector<Vec> slerp_frames(const Vec& p, const Vec& q, int n_segments, const Vec& center);

double mean_segment_length(const DiscretePath& path);

/// Weighted average of the trailing segment vectors, rescaled to `step`.
Vec initial_direction(const DiscretePath& path, const ExtrapConfig& cfg, double step);

/// Momentum-guided walk from path.back() with the score evaluated at noise level t.
/// Returns the num_steps new points.
std::vector<Vec> extrapolate(const DiscretePath& path, const ScoreField& field, int t, const ExtrapConfig& cfg);

/// Straight walk from path.back() along initial_direction; the epsilon = 0 limit of extrapolate.
std::vector<Vec> linear_continuation(const DiscretePath& path, const ExtrapConfig& cfg);

struct ExtrapolationResult {
  GeodesicResult geodesic;
  std::vector<Vec> noisy_continuation;
  /// Clean continuation frames.
  std::vector<Vec> frames;
  double step_size = 0.0;
};

ExtrapolationResult extrapolate_after_geodesic(const Vec& p, const Vec& q, const ScoreField& field,
                                               const NoiseSchedule& sched, const GeodesicConfig& gcfg,
                                               const ExtrapConfig& ecfg);

}  // namespace scoregeo
