#include "scoregeo/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "scoregeo/diffusion.hpp"
#include "scoregeo/error.hpp"

namespace scoregeo {

namespace fs = std::filesystem;

std::string frames_to_json(const std::string& method, const std::vector<Vec>& frames) {
  json j;
  j["method"] = method;
  j["dimension"] = frames.empty() ? 0 : frames.front().size();
  j["frames"] = points_to_json(frames);
  return dump_json(j);
}

std::string frame_to_pgm(const Vec& frame) {
  const auto n = frame.size();
  const auto side = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(n))));
  if (side * side != n || n == 0) {
    throw ArgumentError("frame_to_pgm: dimension " + std::to_string(n) + " is not a perfect square");
  }
  std::string out = "P5\n" + std::to_string(side) + " " + std::to_string(side) + "\n255\n";
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = std::clamp(frame[i], 0.0, 1.0);
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
  }
  return out;
}

namespace {

void ensure_output_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  }
  // Probe writability up front so no command leaves half its outputs behind.
  const fs::path probe = dir / ".scoregeo_write_probe";
  {
    std::ofstream f(probe);
    if (!f) throw IoError("output directory '" + dir.string() + "' is not writable");
  }
  fs::remove(probe, ec);
}

bool is_perfect_square(Eigen::Index n) {
  const auto side = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(n))));
  return n > 0 && side * side == n;
}

Dataset load_input_dataset(const RunConfig& cfg) {
  const fs::path p = cfg.resolved_dataset_path();
  if (!fs::exists(p)) throw IoError("dataset file not found: " + p.string());
  return load_dataset(p);
}

std::optional<Embedding> load_optional_embedding(const RunConfig& cfg) {
  const fs::path p = cfg.resolved_embedding_path();
  if (!fs::exists(p)) {
    if (cfg.embedding_path) throw IoError("embedding file not found: " + p.string());
    return std::nullopt;
  }
  return Embedding::from_json(json::parse(read_text_file(p)));
}

SphereSpec sphere_of(const RunConfig& cfg) { return cfg.sphere ? *cfg.sphere : SphereSpec{}; }

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json doubles_to_json(const std::vector<double>& v) {
  json a = json::array();
  for (double d : v) a.push_back(number_or_null(d));
  return a;
}

void write_frames(const fs::path& dir, const std::string& stem, const std::string& method,
                  const std::vector<Vec>& frames) {
  write_text_file(dir / (stem + "_" + method + "_frames.json"), frames_to_json(method, frames));
  if (!frames.empty() && is_perfect_square(frames.front().size())) {
    for (std::size_t i = 0; i < frames.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "_frame%02zu.pgm", i);
      write_text_file(dir / (stem + "_" + method + name), frame_to_pgm(frames[i]));
    }
  }
}

// Radial deviation, polyline length and midpoint PSNR against the great-circle midpoint.
json frame_metrics(const std::vector<Vec>& frames, const std::optional<Embedding>& emb, double radius) {
  json m;
  m["path_length"] = polyline_length(frames);
  if (!emb || frames.size() < 2) return m;
  const auto dev = radial_deviation(frames, *emb, radius);
  m["radial_deviation"] = doubles_to_json(dev);
  m["max_radial_deviation"] = *std::max_element(dev.begin(), dev.end());
  double mean = 0.0;
  for (double d : dev) mean += d;
  m["mean_radial_deviation"] = mean / static_cast<double>(dev.size());

  const Vec3 a = emb->unembed(frames.front());
  const Vec3 b = emb->unembed(frames.back());
  const std::size_t mid = (frames.size() - 1) / 2;
  const double tau = static_cast<double>(mid) / static_cast<double>(frames.size() - 1);
  if (a.norm() > 0.0 && b.norm() > 0.0 && a.normalized().dot(b.normalized()) > -1.0 + 1e-9) {
    const Vec oracle = emb->embed(great_circle(radius * a.normalized(), radius * b.normalized(), tau));
    m["midpoint_psnr"] = number_or_null(psnr(frames[mid], oracle, 1.0));
  }
  return m;
}

json energy_json(const EnergyReport& e) {
  return json{{"total", e.total}, {"data", e.data_energy}, {"smooth", e.smooth_penalty}, {"mono", e.mono_penalty}};
}

void check_index(long idx, const Dataset& ds, const char* which) {
  if (idx < 0 || idx >= ds.size()) {
    throw ArgumentError(std::string("index --") + which + "=" + std::to_string(idx) + " outside [0, " +
                        std::to_string(ds.size()) + ")");
  }
}

std::string run_stem(const char* command, long a, long b) {
  return std::string(command) + "_a" + std::to_string(a) + "_b" + std::to_string(b);
}

}  // namespace

// ---------------------------------------------------------------------------

int cmd_gen_sphere(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  SphereSpec spec = sphere_of(cfg);
  spec.embed_seed = derive_seed(cfg.seed, "gen-sphere.embedding");
  spec.sample_seed = derive_seed(cfg.seed, "gen-sphere.vmf");
  spec.validate();
  ensure_output_dir(cfg.output_dir);

  const Embedding emb = make_embedding(spec.ambient_dim, spec.embed_seed, spec.offset);
  const Dataset ds = make_sphere_dataset(spec, emb);
  const auto pair = pick_endpoint_pair(ds, emb, spec, std::numbers::pi / 2);
  const Vec3 ua = emb.unembed(ds.point(pair.first)).normalized();
  const Vec3 ub = emb.unembed(ds.point(pair.second)).normalized();

  write_text_file(cfg.output_dir / "dataset.json", dataset_to_json(ds));
  write_text_file(cfg.output_dir / "dataset.csv", dataset_to_csv(ds));
  write_text_file(cfg.output_dir / "embedding.json", dump_json(emb.to_json(), -1));
  json meta{{"radius", spec.radius},
            {"kappa", spec.vmf_kappa},
            {"mean", vec_to_json(spec.vmf_mean)},
            {"ambient_dim", spec.ambient_dim},
            {"num_samples", spec.num_samples},
            {"offset", spec.offset},
            {"embed_seed", spec.embed_seed},
            {"sample_seed", spec.sample_seed},
            {"suggested_pair", json::array({pair.first, pair.second})},
            {"suggested_pair_angle_deg", std::atan2(ua.cross(ub).norm(), ua.dot(ub)) * 180.0 / std::numbers::pi}};
  write_text_file(cfg.output_dir / "sphere_meta.json", dump_json(meta));

  out << "gen-sphere: M=" << ds.size() << " N=" << ds.dimension() << " seed=" << cfg.seed
      << " suggested pair: --a " << pair.first << " --b " << pair.second << "\n";
  return kExitOk;
}

int cmd_score_check(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const Dataset ds = load_input_dataset(cfg);
  const auto emb = load_optional_embedding(cfg);
  const NoiseSchedule sched = cfg.schedule.build();
  const auto& sc = cfg.score_check;
  const int t = sc.t ? *sc.t : std::max(1, sched.timestep_for_alpha_bar(sc.alpha_bar));
  const ScoreFieldPtr field = build_score_field(cfg, sched, &ds);
  const ScoreFieldPtr oracle_density = build_score_field(cfg, sched, &ds, sc.fd_variance_scale);

  // Finite-difference agreement on forward-noised data points.
  std::mt19937_64 rng(derive_seed(cfg.seed, "score-check.fd"));
  std::uniform_int_distribution<Eigen::Index> pick(0, ds.size() - 1);
  std::normal_distribution<double> normal;
  double worst_fd = 0.0;
  for (int k = 0; k < sc.fd_probes; ++k) {
    Vec eps(ds.dimension());
    for (Eigen::Index i = 0; i < eps.size(); ++i) eps[i] = normal(rng);
    const Vec x = forward_noise(ds.point(pick(rng)), eps, t, sched);
    const Vec s = field->score(x, t);
    const Vec fd = score_fd_oracle(
        x, [&](const Vec& y) { return oracle_density->log_density(y, t); }, sc.fd_step);
    worst_fd = std::max(worst_fd, (s - fd).norm() / std::max(fd.norm(), 1e-12));
  }
  const bool fd_ok = worst_fd <= sc.fd_tol;

  json report;
  report["t"] = t;
  report["alpha_bar"] = sched.alpha_bar(t);
  report["score_kind"] = field->kind();
  report["fd_oracle"] = json{{"probes", sc.fd_probes},
                             {"h", sc.fd_step},
                             {"max_relative_error", worst_fd},
                             {"tolerance", sc.fd_tol},
                             {"passed", fd_ok}};

  bool align_ok = true;
  std::ostringstream table;
  table << std::left << std::setw(28) << "check" << std::setw(16) << "value" << std::setw(12) << "threshold"
        << "status\n";
  table << std::setw(28) << "fd max relative error" << std::setw(16) << worst_fd << std::setw(12) << sc.fd_tol
        << (fd_ok ? "PASS" : "FAIL") << "\n";

  if (emb) {
    const SphereSpec spec = sphere_of(cfg);
    const auto st = score_normal_alignment(*field, spec, *emb, sc.probes, t, sched, sc.offset_range,
                                           derive_seed(cfg.seed, "score-check.alignment"));
    align_ok = st.defined && st.mean_abs_cos >= sc.alignment_min;
    json hist = json::array();
    for (int h : st.histogram) hist.push_back(h);
    report["alignment"] = json{{"probes", st.probes},
                              {"valid", st.valid},
                              {"defined", st.defined},
                              {"mean_abs_cos", number_or_null(st.mean_abs_cos)},
                              {"min_abs_cos", number_or_null(st.min_abs_cos)},
                              {"mean_normal_fraction", number_or_null(st.mean_normal_fraction)},
                              {"min_normal_fraction", number_or_null(st.min_normal_fraction)},
                              {"histogram", hist},
                              {"threshold", sc.alignment_min},
                              {"passed", align_ok}};
    table << std::setw(28) << "alignment mean |cos|" << std::setw(16) << st.mean_abs_cos << std::setw(12)
          << sc.alignment_min << (align_ok ? "PASS" : "FAIL") << "\n";
    table << std::setw(28) << "alignment min |cos|" << std::setw(16) << st.min_abs_cos << "\n";
  } else {
    report["alignment"] = json{{"skipped", "no embedding file"}};
    table << std::setw(28) << "alignment" << "skipped (no embedding)\n";
  }
  report["passed"] = fd_ok && align_ok;

  ensure_output_dir(cfg.output_dir);
  write_text_file(cfg.output_dir / "score_check.json", dump_json(report));
  out << "score-check at t=" << t << " (alpha_bar=" << sched.alpha_bar(t) << ")\n" << table.str();
  return fd_ok && align_ok ? kExitOk : kExitCheckFailed;
}

int cmd_interpolate(const RunConfig& cfg, long a, long b, const std::vector<std::string>& methods,
                    std::ostream& out, std::ostream& err) {
  for (const auto& m : methods) {
    if (m != "geodesic" && m != "lerp" && m != "slerp") throw ArgumentError("unknown interpolation method '" + m + "'");
  }
  if (methods.empty()) throw ArgumentError("no interpolation methods requested");
  const Dataset ds = load_input_dataset(cfg);
  check_index(a, ds, "a");
  check_index(b, ds, "b");
  if (a == b) err << "warning: --a and --b are identical; emitting a constant path\n";
  const auto emb = load_optional_embedding(cfg);
  const double radius = sphere_of(cfg).radius;
  const Vec p = ds.point(a);
  const Vec q = ds.point(b);
  const int n = cfg.geodesic.n_segments;
  ensure_output_dir(cfg.output_dir);
  const std::string stem = run_stem("interpolate", a, b);

  json metrics;
  metrics["command"] = "interpolate";
  metrics["a"] = a;
  metrics["b"] = b;
  metrics["seed"] = cfg.seed;
  metrics["n_segments"] = n;
  if (emb) {
    const Vec3 ua = emb->unembed(p);
    const Vec3 ub = emb->unembed(q);
    if (ua.norm() > 0 && ub.norm() > 0 && ua.normalized().dot(ub.normalized()) > -1.0 + 1e-9) {
      metrics["great_circle_arc"] = arc_length(radius * ua.normalized(), radius * ub.normalized());
    }
  }
  json per = json::object();
  for (const auto& method : methods) {
    std::vector<Vec> frames;
    json m;
    if (method == "lerp") {
      frames = lerp_frames(p, q, n);
    } else if (method == "slerp") {
      frames = slerp_frames(p, q, n, emb ? emb->offset : Vec(Vec::Zero(p.size())));
    } else {
      const NoiseSchedule sched = cfg.schedule.build();
      const ScoreFieldPtr field = build_score_field(cfg, sched, &ds);
      GeodesicConfig g = cfg.geodesic;
      g.rng_seed = derive_seed(cfg.seed, "geodesic");
      const GeodesicResult r = solve_geodesic(p, q, *field, sched, g);
      frames = geodesic_frames(r, p, q);
      GeodesicConfig lg = g;
      lg.lambda = r.lambda;
      m["lambda"] = r.lambda;
      m["iterations"] = r.iterations;
      m["converged"] = r.converged;
      m["initial_energy"] = energy_json(r.initial_energy);
      m["final_energy"] = energy_json(r.final_energy);
      m["noisy_metric_length"] = path_length(r.noisy, *field, lg);
      write_text_file(cfg.output_dir / (stem + "_geodesic_energy.csv"), trace_to_csv(r.trace));
      write_text_file(cfg.output_dir / (stem + "_geodesic_noisy_frames.json"),
                      frames_to_json("geodesic_noisy", r.noisy.points()));
    }
    m.update(frame_metrics(frames, emb, radius));
    write_frames(cfg.output_dir, stem, method, frames);
    per[method] = std::move(m);
  }
  metrics["methods"] = std::move(per);
  write_text_file(cfg.output_dir / (stem + "_metrics.json"), dump_json(metrics));

  out << "interpolate a=" << a << " b=" << b << "\n";
  for (auto it = metrics["methods"].begin(); it != metrics["methods"].end(); ++it) {
    out << "  " << std::left << std::setw(10) << it.key() << " length=" << it.value()["path_length"].get<double>();
    if (it.value().contains("max_radial_deviation")) {
      out << " max_radial_dev=" << it.value()["max_radial_deviation"].get<double>();
    }
    out << "\n";
  }
  return kExitOk;
}

int cmd_extrapolate(const RunConfig& cfg, long a, long b, std::ostream& out, std::ostream& err) {
  const Dataset ds = load_input_dataset(cfg);
  check_index(a, ds, "a");
  check_index(b, ds, "b");
  if (a == b) throw ArgumentError("extrapolate: --a and --b must differ to define a direction");
  (void)err;
  const auto emb = load_optional_embedding(cfg);
  const double radius = sphere_of(cfg).radius;
  const NoiseSchedule sched = cfg.schedule.build();
  const ScoreFieldPtr field = build_score_field(cfg, sched, &ds);
  GeodesicConfig g = cfg.geodesic;
  g.rng_seed = derive_seed(cfg.seed, "geodesic");
  const ExtrapConfig& e = cfg.extrapolation;
  ensure_output_dir(cfg.output_dir);
  const std::string stem = run_stem("extrapolate", a, b);

  const ExtrapolationResult r = extrapolate_after_geodesic(ds.point(a), ds.point(b), *field, sched, g, e);

  json metrics;
  metrics["command"] = "extrapolate";
  metrics["a"] = a;
  metrics["b"] = b;
  metrics["seed"] = cfg.seed;
  metrics["num_steps"] = e.num_steps;
  metrics["epsilon_guide"] = e.epsilon_guide;
  write_text_file(cfg.output_dir / (stem + "_geodesic_energy.csv"), trace_to_csv(r.geodesic.trace));

  // Clean straight continuation of the clean interpolation frames with an arc-equivalent step.
  ExtrapConfig clean = e;
  clean.step_size = e.step_size ? std::optional<double>(*e.step_size / std::sqrt(sched.alpha_bar(g.t_noise)))
                                : std::optional<double>(mean_segment_length(r.geodesic.denoised));
  const auto linear = linear_continuation(r.geodesic.denoised, clean);

  json per = json::object();
  auto continuation_metrics = [&](const std::vector<Vec>& frames) {
    json m;
    std::vector<Vec> with_start{ds.point(b)};
    with_start.insert(with_start.end(), frames.begin(), frames.end());
    m["path_length"] = polyline_length(with_start);
    if (emb && !frames.empty()) {
      const auto dev = radial_deviation(frames, *emb, radius);
      m["radial_deviation"] = doubles_to_json(dev);
      m["max_radial_deviation"] = *std::max_element(dev.begin(), dev.end());
      double mean = 0.0;
      for (double d : dev) mean += d;
      m["mean_radial_deviation"] = mean / static_cast<double>(dev.size());
      m["final_radial_deviation"] = dev.back();
    }
    return m;
  };
  if (e.num_steps == 0) {
    metrics["note"] = "num_steps = 0: empty continuation, baseline-only report";
  } else {
    json guided = continuation_metrics(r.frames);
    guided["step_size_noisy"] = r.step_size;
    // Distance of the noisy guided walk from the straight noisy continuation.
    const auto noisy_linear = linear_continuation(r.geodesic.noisy, e);
    std::vector<double> gap;
    for (std::size_t k = 0; k < noisy_linear.size(); ++k) {
      gap.push_back((r.noisy_continuation[k] - noisy_linear[k]).norm());
    }
    guided["noisy_linear_gap"] = doubles_to_json(gap);
    per["guided"] = std::move(guided);
    write_frames(cfg.output_dir, stem, "guided", r.frames);
  }
  json lin = continuation_metrics(linear);
  if (clean.step_size) lin["step_size"] = *clean.step_size;
  per["linear"] = std::move(lin);
  if (!linear.empty()) write_frames(cfg.output_dir, stem, "linear", linear);
  metrics["methods"] = std::move(per);
  write_text_file(cfg.output_dir / (stem + "_metrics.json"), dump_json(metrics));

  out << "extrapolate a=" << a << " b=" << b << " steps=" << e.num_steps << "\n";
  for (auto it = metrics["methods"].begin(); it != metrics["methods"].end(); ++it) {
    out << "  " << std::left << std::setw(8) << it.key();
    if (it.value().contains("max_radial_deviation")) {
      out << " max_radial_dev=" << it.value()["max_radial_deviation"].get<double>()
          << " final_radial_dev=" << it.value()["final_radial_deviation"].get<double>();
    }
    out << "\n";
  }
  return kExitOk;
}

int cmd_report(const fs::path& run_dir, std::ostream& out, std::ostream&) {
  if (!fs::is_directory(run_dir)) throw IoError("report: not a directory: " + run_dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(run_dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.size() > 13 && name.ends_with("_metrics.json")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  json rows = json::array();
  std::vector<std::string> absent;
  for (const auto& f : files) {
    json m;
    try {
      m = json::parse(read_text_file(f));
    } catch (const json::exception&) {
      absent.push_back(f.filename().string() + " (unreadable)");
      continue;
    }
    if (!m.contains("methods") || !m["methods"].is_object()) {
      absent.push_back(f.filename().string() + " (no methods)");
      continue;
    }
    const std::string run = f.filename().string().substr(0, f.filename().string().size() - 13);
    for (auto it = m["methods"].begin(); it != m["methods"].end(); ++it) {
      json row{{"run", run}, {"method", it.key()}};
      for (const char* key : {"path_length", "max_radial_deviation", "mean_radial_deviation", "midpoint_psnr"}) {
        row[key] = it.value().contains(key) ? it.value()[key] : json(nullptr);
      }
      rows.push_back(std::move(row));
    }
  }

  json report{{"rows", rows}, {"absent", absent}};
  if (rows.empty()) {
    out << "no runs found in " << run_dir.string() << "\n";
  } else {
    auto cell = [](const json& v) {
      if (v.is_null()) return std::string("absent");
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.6g", v.get<double>());
      return std::string(buf);
    };
    out << std::left << std::setw(34) << "run" << std::setw(10) << "method" << std::setw(14) << "length"
        << std::setw(14) << "max_dev" << std::setw(14) << "mean_dev" << "mid_psnr\n";
    for (const auto& r : rows) {
      out << std::setw(34) << r["run"].get<std::string>() << std::setw(10) << r["method"].get<std::string>()
          << std::setw(14) << cell(r["path_length"]) << std::setw(14) << cell(r["max_radial_deviation"])
          << std::setw(14) << cell(r["mean_radial_deviation"]) << cell(r["midpoint_psnr"]) << "\n";
    }
  }
  for (const auto& a : absent) out << "absent: " << a << "\n";
  write_text_file(run_dir / "report.json", dump_json(report));
  return kExitOk;
}

// ---------------------------------------------------------------------------

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Score-metric geodesics, interpolation and extrapolation"};
  app.require_subcommand(1);

  std::string config_path;
  long a = 0;
  long b = 0;
  std::string methods = "geodesic,lerp,slerp";
  std::string run_dir;

  auto* gen = app.add_subcommand("gen-sphere", "Sample the vMF sphere dataset and its embedding");
  gen->add_option("--config", config_path, "Run config JSON")->required();
  auto* check = app.add_subcommand("score-check", "Finite-difference and score-normal alignment checks");
  check->add_option("--config", config_path, "Run config JSON")->required();
  auto* interp = app.add_subcommand("interpolate", "Geodesic / LERP / SLERP interpolation between two points");
  interp->add_option("--config", config_path, "Run config JSON")->required();
  interp->add_option("--a", a, "Index of the first dataset point")->required();
  interp->add_option("--b", b, "Index of the second dataset point")->required();
  interp->add_option("--methods", methods, "Comma-separated subset of geodesic,lerp,slerp");
  auto* extra = app.add_subcommand("extrapolate", "Score-guided extrapolation past point b");
  extra->add_option("--config", config_path, "Run config JSON")->required();
  extra->add_option("--a", a, "Index of the first dataset point")->required();
  extra->add_option("--b", b, "Index of the second dataset point")->required();
  auto* report = app.add_subcommand("report", "Summarize metrics JSON files in a run directory");
  report->add_option("DIR", run_dir, "Run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, er;
    const int code = app.exit(e, o, er);
    out << o.str();
    err << er.str();
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (report->parsed()) return cmd_report(run_dir, out, err);
    const RunConfig cfg = load_run_config(config_path);
    if (gen->parsed()) return cmd_gen_sphere(cfg, out, err);
    if (check->parsed()) return cmd_score_check(cfg, out, err);
    if (interp->parsed()) {
      std::vector<std::string> list;
      std::stringstream ss(methods);
      for (std::string item; std::getline(ss, item, ',');) {
        if (!item.empty()) list.push_back(item);
      }
      return cmd_interpolate(cfg, a, b, list, out, err);
    }
    if (extra->parsed()) return cmd_extrapolate(cfg, a, b, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

}  // namespace scoregeo
