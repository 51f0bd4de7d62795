#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "scoregeo/dataset.hpp"
#include "scoregeo/json_io.hpp"
#include "scoregeo/schedule.hpp"
#include "scoregeo/scorefield.hpp"

namespace scoregeo {

using Vec3 = Eigen::Vector3d;

struct SphereSpec {
  double radius = 1.0;
  Vec3 vmf_mean{0.0, 0.0, 1.0};
  double vmf_kappa = 10.0;
  int ambient_dim = 100;
  int num_samples = 2000;
  /// Constant value of every embedding offset coordinate.
  double offset = 0.5;
  std::uint64_t embed_seed = 0;
  std::uint64_t sample_seed = 1;

  void validate() const;
};

/// von Mises-Fisher samples on the unit 2-sphere (Wood's method for the polar
/// coordinate, Householder reflection onto the mean direction).
std::vector<Vec3> sample_vmf(const Vec3& mean, double kappa, int count, std::uint64_t seed);

/// x = Q a + offset with Q an N x 3 column-orthonormal basis.
struct Embedding {
  Eigen::MatrixXd basis;
  Vec offset;
  std::uint64_t seed = 0;

  Eigen::Index dim() const { return basis.rows(); }
  Vec embed(const Vec3& a) const;
  Vec3 unembed(const Vec& x) const;

  /// {"Q": row-major N x 3, "offset": [...], "seed": s}
  json to_json() const;
  static Embedding from_json(const json& j);
};

/// Orthonormal Q from the QR factorization of a seeded Gaussian N x 3 matrix.
Embedding make_embedding(int ambient_dim, std::uint64_t seed, double offset_value = 0.5);

/// Samples the vMF, scales by the radius, and embeds every point.
Dataset make_sphere_dataset(const SphereSpec& spec, const Embedding& emb);

/// Constant-speed great circle between two points of equal norm.
Vec3 great_circle(const Vec3& pa, const Vec3& pb, double tau);
double arc_length(const Vec3& pa, const Vec3& pb);

struct AlignmentStats {
  int probes = 0;
  /// Probes where the score was nonzero.
  int valid = 0;
  bool defined = false;
  /// |cos| between s(x) and the radial direction x - c_t of the noised sphere.
  double mean_abs_cos = 0.0;
  double min_abs_cos = 0.0;
  /// Fraction of ||s|| lying outside the sphere's 2-D tangent plane.
  double mean_normal_fraction = 0.0;
  double min_normal_fraction = 0.0;
  std::array<int, 10> histogram{};
};

/// Probes are forward-noised near-sphere points sqrt(abar_t) embed(R (1 + d) u) + sigma_t eps with u
/// drawn from the sphere's vMF and d uniform in offset_range.
AlignmentStats score_normal_alignment(const ScoreField& field, const SphereSpec& spec, const Embedding& emb,
                                      int probes, int t, const NoiseSchedule& sched,
                                      std::pair<double, double> offset_range, std::uint64_t seed);

/// | ||x - offset|| - R | / R per point.
std::vector<double> radial_deviation(std::span<const Vec> points, const Embedding& emb, double radius);

/// 10 log10(peak^2 / MSE); +infinity when a == b.
double psnr(const Vec& a, const Vec& b, double peak = 1.0);

/// Index pair (a, b) whose central angle is closest to `angle` with both points as close as
/// possible to the vMF mean; used to pick interpolation endpoints.
std::pair<Eigen::Index, Eigen::Index> pick_endpoint_pair(const Dataset& ds, const Embedding& emb,
                                                         const SphereSpec& spec, double angle);

}  // namespace scoregeo
