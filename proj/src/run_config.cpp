#include "scoregeo/run_config.hpp"

#include <cstdlib>
#include <set>

#include "scoregeo/error.hpp"

namespace scoregeo {

namespace {

void reject_unknown(const json& obj, const char* section, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(std::string(section) + ": expected a JSON object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!keys.count(it.key())) throw ConfigError(std::string(section) + ": unknown key '" + it.key() + "'");
  }
}

template <class T>
void read(const json& obj, const char* key, T& out) {
  if (obj.contains(key) && !obj.at(key).is_null()) out = obj.at(key).get<T>();
}

template <class T>
void read_opt(const json& obj, const char* key, std::optional<T>& out) {
  if (obj.contains(key) && !obj.at(key).is_null()) out = obj.at(key).get<T>();
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

SphereSpec parse_sphere(const json& j) {
  reject_unknown(j, "sphere", {"radius", "kappa", "mean", "ambient_dim", "num_samples", "offset"});
  SphereSpec s;
  read(j, "radius", s.radius);
  read(j, "kappa", s.vmf_kappa);
  read(j, "ambient_dim", s.ambient_dim);
  read(j, "num_samples", s.num_samples);
  read(j, "offset", s.offset);
  if (j.contains("mean")) {
    const Vec m = vec_from_json(j.at("mean"), "sphere.mean");
    require(m.size() == 3, "sphere.mean: expected 3 values");
    require(m.norm() > 0.0, "sphere.mean: zero vector");
    s.vmf_mean = Vec3(m[0], m[1], m[2]).normalized();
  }
  require(s.radius > 0.0, "sphere.radius must be > 0");
  require(s.vmf_kappa >= 0.0, "sphere.kappa must be >= 0");
  require(s.ambient_dim >= 3, "sphere.ambient_dim must be >= 3");
  require(s.num_samples >= 1, "sphere.num_samples must be >= 1");
  return s;
}

ScoreConfig parse_score(const json& j) {
  reject_unknown(j, "score", {"kind", "mean", "variance", "components", "diffuse"});
  ScoreConfig s;
  read(j, "kind", s.kind);
  read(j, "variance", s.variance);
  read(j, "diffuse", s.diffuse);
  if (j.contains("mean")) s.mean = vec_from_json(j.at("mean"), "score.mean");
  if (j.contains("components")) {
    for (const auto& c : j.at("components")) {
      reject_unknown(c, "score.components[]", {"weight", "mean", "variance"});
      MixtureComponent mc;
      read(c, "weight", mc.weight);
      read(c, "variance", mc.variance);
      mc.mean = vec_from_json(c.at("mean"), "score.components[].mean");
      s.components.push_back(std::move(mc));
    }
  }
  const std::set<std::string> kinds{"empirical_diffusion", "isotropic_gaussian", "gaussian_mixture", "zero"};
  require(kinds.count(s.kind) > 0, "score.kind: unknown provider '" + s.kind + "'");
  if (s.kind == "isotropic_gaussian") {
    require(s.mean.has_value(), "score.mean is required for isotropic_gaussian");
    require(s.variance > 0.0, "score.variance must be > 0");
  }
  if (s.kind == "gaussian_mixture") require(!s.components.empty(), "score.components must be non-empty");
  return s;
}

ScheduleConfig parse_schedule(const json& j) {
  reject_unknown(j, "schedule", {"kind", "T", "alpha_bar_final", "offset", "max_beta"});
  ScheduleConfig s;
  read(j, "kind", s.kind);
  read(j, "T", s.T);
  read(j, "alpha_bar_final", s.alpha_bar_final);
  read(j, "offset", s.cosine_offset);
  read(j, "max_beta", s.max_beta);
  require(s.kind == "linear" || s.kind == "cosine", "schedule.kind must be 'linear' or 'cosine'");
  require(s.T >= 1, "schedule.T must be >= 1");
  return s;
}

GeodesicConfig parse_geodesic(const json& j) {
  reject_unknown(j, "geodesic",
                 {"lambda", "lambda_scale", "n_segments", "t_noise", "lambda_smooth", "lambda_mono", "max_iters",
                  "patience", "rel_tol", "adam", "score_at_midpoints", "score_jacobian", "transport_momentum",
                  "denoise_steps"});
  GeodesicConfig g;
  read_opt(j, "lambda", g.lambda);
  read(j, "lambda_scale", g.lambda_scale);
  read(j, "n_segments", g.n_segments);
  read(j, "t_noise", g.t_noise);
  read(j, "lambda_smooth", g.lambda_smooth);
  read(j, "lambda_mono", g.lambda_mono);
  read(j, "max_iters", g.max_iters);
  read(j, "patience", g.patience);
  read(j, "rel_tol", g.rel_tol);
  read(j, "score_at_midpoints", g.score_at_midpoints);
  read(j, "score_jacobian", g.score_jacobian);
  read(j, "transport_momentum", g.transport_momentum);
  read(j, "denoise_steps", g.denoise_steps);
  if (j.contains("adam")) {
    const auto& a = j.at("adam");
    reject_unknown(a, "geodesic.adam", {"alpha", "beta1", "beta2", "eps"});
    read(a, "alpha", g.adam.alpha);
    read(a, "beta1", g.adam.beta1);
    read(a, "beta2", g.adam.beta2);
    read(a, "eps", g.adam.eps);
  }
  return g;
}

ExtrapConfig parse_extrapolation(const json& j) {
  reject_unknown(j, "extrapolation",
                 {"epsilon_guide", "beta_momentum", "step_size", "num_steps", "init_window", "init_decay"});
  ExtrapConfig e;
  read(j, "epsilon_guide", e.epsilon_guide);
  read(j, "beta_momentum", e.beta_momentum);
  read_opt(j, "step_size", e.step_size);
  read(j, "num_steps", e.num_steps);
  read(j, "init_window", e.init_window);
  read(j, "init_decay", e.init_decay);
  return e;
}

ScoreCheckConfig parse_score_check(const json& j) {
  reject_unknown(j, "score_check",
                 {"t", "alpha_bar", "probes", "offset_range", "alignment_min", "fd_probes", "fd_step", "fd_tol",
                  "fd_variance_scale"});
  ScoreCheckConfig c;
  read_opt(j, "t", c.t);
  read(j, "alpha_bar", c.alpha_bar);
  read(j, "probes", c.probes);
  read(j, "alignment_min", c.alignment_min);
  read(j, "fd_probes", c.fd_probes);
  read(j, "fd_step", c.fd_step);
  read(j, "fd_tol", c.fd_tol);
  read(j, "fd_variance_scale", c.fd_variance_scale);
  if (j.contains("offset_range")) {
    const Vec r = vec_from_json(j.at("offset_range"), "score_check.offset_range");
    require(r.size() == 2 && r[0] <= r[1], "score_check.offset_range must be [lo, hi] with lo <= hi");
    c.offset_range = {r[0], r[1]};
  }
  require(c.probes >= 1, "score_check.probes must be >= 1");
  require(c.fd_probes >= 0, "score_check.fd_probes must be >= 0");
  require(c.fd_step > 0.0 && c.fd_tol > 0.0, "score_check.fd_step and fd_tol must be > 0");
  require(c.fd_variance_scale > 0.0, "score_check.fd_variance_scale must be > 0");
  require(c.alpha_bar > 0.0 && c.alpha_bar < 1.0, "score_check.alpha_bar must lie in (0, 1)");
  return c;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

NoiseSchedule ScheduleConfig::build() const {
  if (kind == "cosine") return NoiseSchedule::cosine(T, cosine_offset, max_beta);
  return NoiseSchedule::linear(T, alpha_bar_final);
}

std::filesystem::path RunConfig::resolved_dataset_path() const {
  return dataset_path ? *dataset_path : output_dir / "dataset.json";
}

std::filesystem::path RunConfig::resolved_embedding_path() const {
  return embedding_path ? *embedding_path : output_dir / "embedding.json";
}

std::uint64_t derive_seed(std::uint64_t global, std::string_view stage) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : stage) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return global + h;
}

RunConfig parse_run_config(const json& j, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  try {
    reject_unknown(j, "config",
                   {"output_dir", "seed", "sphere", "dataset", "embedding", "score", "schedule", "geodesic",
                    "extrapolation", "score_check"});
    if (j.contains("output_dir")) cfg.output_dir = resolve(base_dir, j.at("output_dir").get<std::string>());
    read(j, "seed", cfg.seed);
    if (j.contains("sphere")) cfg.sphere = parse_sphere(j.at("sphere"));
    if (j.contains("dataset") && !j.at("dataset").is_null()) {
      cfg.dataset_path = resolve(base_dir, j.at("dataset").get<std::string>());
    }
    if (j.contains("embedding") && !j.at("embedding").is_null()) {
      cfg.embedding_path = resolve(base_dir, j.at("embedding").get<std::string>());
    }
    if (j.contains("score")) cfg.score = parse_score(j.at("score"));
    if (j.contains("schedule")) cfg.schedule = parse_schedule(j.at("schedule"));
    if (j.contains("geodesic")) cfg.geodesic = parse_geodesic(j.at("geodesic"));
    if (j.contains("extrapolation")) cfg.extrapolation = parse_extrapolation(j.at("extrapolation"));
    if (j.contains("score_check")) cfg.score_check = parse_score_check(j.at("score_check"));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  }
  try {
    cfg.geodesic.validate();
    cfg.extrapolation.validate();
    if (cfg.sphere) cfg.sphere->validate();
    const auto sched = cfg.schedule.build();
    if (cfg.geodesic.t_noise > sched.T()) throw ConfigError("geodesic.t_noise exceeds schedule.T");
    if (cfg.score_check.t && (*cfg.score_check.t < 1 || *cfg.score_check.t > sched.T())) {
      throw ConfigError("score_check.t must lie in [1, schedule.T]");
    }
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
  if (const char* env = std::getenv("SCOREGEO_OUTPUT_DIR"); env && *env) cfg.output_dir = env;
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "': " + e.what());
  }
  return parse_run_config(j, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

ScoreFieldPtr build_score_field(const RunConfig& cfg, const NoiseSchedule& sched, const Dataset* data,
                                double variance_scale) {
  const auto& s = cfg.score;
  std::optional<NoiseSchedule> diffuse;
  if (s.diffuse) diffuse = sched;
  if (s.kind == "empirical_diffusion") {
    if (!data) throw ConfigError("empirical_diffusion score requires a dataset");
    return std::make_shared<EmpiricalDiffusionField>(*data, sched, variance_scale);
  }
  if (s.kind == "isotropic_gaussian") {
    return std::make_shared<IsotropicGaussianField>(*s.mean, s.variance * variance_scale, diffuse);
  }
  if (s.kind == "gaussian_mixture") {
    auto comps = s.components;
    for (auto& c : comps) c.variance *= variance_scale;
    return std::make_shared<GaussianMixtureField>(std::move(comps), diffuse);
  }
  const Eigen::Index dim = data ? data->dimension() : (s.mean ? s.mean->size() : 0);
  if (dim < 1) throw ConfigError("zero score field needs a dataset or score.mean to fix the dimension");
  return std::make_shared<ZeroField>(dim);
}

}  // namespace scoregeo
