#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "scoregeo/geodesic.hpp"
#include "scoregeo/json_io.hpp"
#include "scoregeo/pathnav.hpp"
#include "scoregeo/synthbench.hpp"

namespace scoregeo {

struct ScheduleConfig {
  std::string kind = "linear";  // linear | cosine
  int T = 1000;
  double alpha_bar_final = 0.02;
  double cosine_offset = 0.008;
  double max_beta = 0.999;

  NoiseSchedule build() const;
};

struct ScoreConfig {
  std::string kind = "empirical_diffusion";  // empirical_diffusion | isotropic_gaussian | gaussian_mixture | zero
  std::optional<Vec> mean;
  double variance = 1.0;
  std::vector<MixtureComponent> components;
  /// Gaussian providers: evaluate the diffused density p_t through the schedule.
  bool diffuse = true;
};

struct ScoreCheckConfig {
  /// Noise level for the checks; when unset, the first timestep with alpha_bar <= alpha_bar.
  std::optional<int> t;
  double alpha_bar = 0.5;
  int probes = 500;
  std::pair<double, double> offset_range{-0.05, 0.05};
  double alignment_min = 0.95;
  int fd_probes = 20;
  double fd_step = 1e-4;
  double fd_tol = 1e-4;
  /// Kernel variance multiplier for the oracle's density; 1 is the correct model.
  double fd_variance_scale = 1.0;
};

/// Everything a CLI run needs, parsed from one JSON document.
struct RunConfig {
  std::filesystem::path output_dir = "scoregeo_out";
  std::uint64_t seed = 0;
  std::optional<SphereSpec> sphere;
  std::optional<std::filesystem::path> dataset_path;
  std::optional<std::filesystem::path> embedding_path;
  ScoreConfig score;
  ScheduleConfig schedule;
  GeodesicConfig geodesic;
  ExtrapConfig extrapolation;
  ScoreCheckConfig score_check;

  std::filesystem::path resolved_dataset_path() const;
  std::filesystem::path resolved_embedding_path() const;
};

/// Stable 64-bit FNV-1a of a stage tag, mixed into the global seed.
std::uint64_t derive_seed(std::uint64_t global, std::string_view stage);

/// Parses and validates; unknown keys and out-of-range values raise ConfigError.
/// Relative paths resolve against base_dir. SCOREGEO_OUTPUT_DIR overrides output_dir.
RunConfig parse_run_config(const json& j, const std::filesystem::path& base_dir = ".");
RunConfig load_run_config(const std::filesystem::path& path);

/// The configured score field; `data` is required for empirical_diffusion.
ScoreFieldPtr build_score_field(const RunConfig& cfg, const NoiseSchedule& sched, const Dataset* data,
                                double variance_scale = 1.0);

}  // namespace scoregeo
