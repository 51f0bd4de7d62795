// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 when any criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>

#include <unistd.h>

#include "oracles.hpp"
#include "scoregeo/commands.hpp"
#include "scoregeo/diffusion.hpp"
#include "scoregeo/geodesic.hpp"
#include "scoregeo/pathnav.hpp"
#include "scoregeo/scorefield.hpp"
#include "scoregeo/synthbench.hpp"
#include "scoregeo/vecspace.hpp"

using namespace scoregeo;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "scoregeo");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != kExitOk) std::fprintf(stderr, "%s%s", out.str().c_str(), err.str().c_str());
  return code;
}

std::map<std::string, std::string> json_snapshot(const fs::path& dir) {
  std::map<std::string, std::string> snap;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".json") snap[e.path().filename().string()] = slurp(e.path());
  }
  return snap;
}

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::exp(oracle::uniform(rng, std::log(lo), std::log(hi)));
}

std::vector<MixtureComponent> random_mixture(std::mt19937_64& rng, int k, int n) {
  std::vector<MixtureComponent> comps;
  double total = 0.0;
  for (int j = 0; j < k; ++j) {
    comps.push_back({oracle::uniform(rng, 0.2, 1.0), oracle::random_vec(rng, n), oracle::uniform(rng, 0.4, 1.5)});
    total += comps.back().weight;
  }
  for (auto& c : comps) c.weight /= total;
  return comps;
}

// State shared by the sphere criteria: one default pipeline run through the CLI.
struct SphereRun {
  fs::path dir;
  fs::path config;
  long a = 0;
  long b = 0;
  bool ok = false;
};

SphereRun& sphere_run() {
  static SphereRun run = [] {
    SphereRun r;
    r.dir = fs::temp_directory_path() / ("scoregeo_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(r.dir);
    fs::create_directories(r.dir);
    r.config = r.dir / "config.json";
    std::ofstream(r.config) << R"({"output_dir": ")" << (r.dir / "out").string()
                            << R"(", "seed": 0, "extrapolation": {"num_steps": 10}, "score_check": {"probes": 500}})";
    if (cli({"gen-sphere", "--config", r.config.string()}) != kExitOk) return r;
    const json meta = json::parse(slurp(r.dir / "out" / "sphere_meta.json"));
    r.a = meta["suggested_pair"][0].get<long>();
    r.b = meta["suggested_pair"][1].get<long>();
    r.ok = true;
    return r;
  }();
  return run;
}

std::string pair_args_a() { return std::to_string(sphere_run().a); }
std::string pair_args_b() { return std::to_string(sphere_run().b); }

json run_interpolate() {
  static const json m = [] {
    const SphereRun& r = sphere_run();
    if (!r.ok) return json();
    if (cli({"interpolate", "--config", r.config.string(), "--a", pair_args_a(), "--b", pair_args_b(), "--methods",
             "geodesic,lerp,slerp"}) != kExitOk) {
      return json();
    }
    return json::parse(slurp(r.dir / "out" / ("interpolate_a" + pair_args_a() + "_b" + pair_args_b() + "_metrics.json")));
  }();
  return m;
}

json run_extrapolate() {
  static const json m = [] {
    const SphereRun& r = sphere_run();
    if (!r.ok) return json();
    if (cli({"extrapolate", "--config", r.config.string(), "--a", pair_args_a(), "--b", pair_args_b()}) != kExitOk) {
      return json();
    }
    return json::parse(slurp(r.dir / "out" / ("extrapolate_a" + pair_args_a() + "_b" + pair_args_b() + "_metrics.json")));
  }();
  return m;
}

// Energies of every optimized acceptance instance, collected for criterion 10.
std::vector<std::pair<std::string, std::pair<double, double>>>& energy_log() {
  static std::vector<std::pair<std::string, std::pair<double, double>>> log;
  return log;
}

Outcome metric_validity() {
  std::mt19937_64 rng(101);
  const int draws = 10000;
  double worst_sym = 0.0;
  double worst_slack = INFINITY;
  bool ok = true;
  for (int k = 0; k < draws; ++k) {
    const int n = std::array<int, 3>{2, 100, 1024}[k % 3];
    const Vec s = oracle::random_vec(rng, n, log_uniform(rng, 1e-3, 1e2));
    const double lam = k % 7 == 0 ? 0.0 : log_uniform(rng, 1e-6, 1e6);
    const MetricValidityReport rep = metric_validity_check(SteinMetric(s, lam), 1, rng());
    ok = ok && rep.passed && rep.min_norm_sq > 0.0;
    worst_sym = std::max(worst_sym, rep.worst_symmetry_error);
    worst_slack = std::min(worst_slack, rep.worst_pd_slack);
  }
  ok = ok && worst_sym <= 1e-12 && worst_slack >= 0.0;
  return {ok, "draws=10000 worst_sym=" + fmt("%.3g", worst_sym) + " min_pd_slack=" + fmt("%.3g", worst_slack)};
}

Outcome sherman_morrison() {
  std::mt19937_64 rng(202);
  double worst_dense = 0.0;
  for (int n = 1; n <= 8; ++n) {
    for (int k = 0; k < 250; ++k) {
      const Vec s = oracle::random_vec(rng, n, log_uniform(rng, 1e-2, 1e1));
      const double lam = log_uniform(rng, 1e-6, 1e6);
      const Vec b = oracle::random_vec(rng, n);
      worst_dense = std::max(worst_dense, oracle::rel_err(metric_inverse_apply(b, SteinMetric(s, lam)),
                                                          oracle::dense_inverse_apply(s, lam, b)));
    }
  }
  double worst_trip = 0.0;
  for (int n : {2, 16, 100, 512, 1024}) {
    for (int k = 0; k < 200; ++k) {
      // Unit-scale scores: lambda alone sets the conditioning, 1 + lambda ||s||^2 <= 1 + 1e6.
      Vec s = oracle::random_vec(rng, n);
      s *= log_uniform(rng, 1e-3, 1.0) / s.norm();
      const SteinMetric m(s, log_uniform(rng, 1e-6, 1e6));
      const Vec v = oracle::random_vec(rng, n);
      worst_trip = std::max(worst_trip, oracle::rel_err(metric_inverse_apply(metric_apply(v, m), m), v));
      worst_trip = std::max(worst_trip, oracle::rel_err(metric_apply(metric_inverse_apply(v, m), m), v));
    }
  }
  return {worst_dense <= 1e-10 && worst_trip <= 1e-10,
          "dense_rel=" + fmt("%.3g", worst_dense) + " round_trip_rel=" + fmt("%.3g", worst_trip)};
}

Outcome score_oracles() {
  std::mt19937_64 rng(303);
  const NoiseSchedule sched = NoiseSchedule::linear();
  std::map<std::string, double> worst;
  const auto probe = [&](const std::string& name, const ScoreField& f, int t, const Vec& x) {
    const Vec fd = score_fd_oracle(x, [&](const Vec& y) { return f.log_density(y, t); }, 1e-4);
    worst[name] = std::max(worst[name], oracle::rel_err(f.score(x, t), fd));
  };
  for (int k = 0; k < 100; ++k) {
    const int n = 1 + k % 10;
    const int t = k % 4 == 0 ? 0 : 1 + 9 * k;
    IsotropicGaussianField g(oracle::random_vec(rng, n), oracle::uniform(rng, 0.2, 2.0), sched);
    probe("gaussian", g, t, oracle::random_vec(rng, n, 1.5));
    GaussianMixtureField gm(random_mixture(rng, 4, n), sched);
    probe("mixture", gm, t, oracle::random_vec(rng, n, 1.5));
    Dataset ds;
    ds.points.resize(50, n);
    for (int j = 0; j < 50; ++j) ds.points.row(j) = oracle::random_vec(rng, n).transpose();
    EmpiricalDiffusionField e(ds, sched);
    probe("empirical", e, 20 + 9 * k, oracle::random_vec(rng, n));
  }
  bool ok = true;
  std::string detail = "probes=100/provider";
  for (const auto& [name, err] : worst) {
    ok = ok && err <= 1e-4;
    detail += " " + name + "=" + fmt("%.3g", err);
  }
  return {ok, detail};
}

Outcome energy_gradient() {
  std::mt19937_64 rng(404);
  const NoiseSchedule sched = NoiseSchedule::linear();
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int n_dim = 1 + trial % 5;
    const int n_seg = 2 + trial % 5;
    GaussianMixtureField f(random_mixture(rng, 3, n_dim), sched);
    GeodesicConfig cfg;
    cfg.lambda = oracle::uniform(rng, 0.1, 3.0);
    cfg.t_noise = 50;
    cfg.lambda_smooth = oracle::uniform(rng, 0.05, 0.5);
    cfg.lambda_mono = oracle::uniform(rng, 0.05, 0.5);
    cfg.score_jacobian = true;
    DiscretePath path = DiscretePath::linear(oracle::random_vec(rng, n_dim), oracle::random_vec(rng, n_dim), n_seg);
    for (int i = 1; i < n_seg; ++i) path.interior(i) += oracle::random_vec(rng, n_dim, 0.4);
    for (bool mid : {true, false}) {
      cfg.score_at_midpoints = mid;
      const EnergyGradient eg = energy_and_gradient(path, f, cfg);
      for (int i = 1; i < n_seg; ++i) {
        const Vec fd = oracle::central_gradient(
            [&](const Vec& x) {
              DiscretePath p = path;
              p.interior(i) = x;
              return discrete_energy(p, f, cfg).total;
            },
            path[static_cast<std::size_t>(i)], 1e-5);
        worst = std::max(worst, (eg.grads[i - 1] - fd).norm() / std::max(fd.norm(), 1e-6));
      }
    }
  }
  return {worst <= 1e-4, "instances=20 modes=2 worst_rel=" + fmt("%.3g", worst)};
}

Outcome euclidean_degeneration() {
  std::mt19937_64 rng(505);
  const NoiseSchedule sched = NoiseSchedule::linear();
  GaussianMixtureField f(random_mixture(rng, 3, 5), sched);
  GeodesicConfig cfg;
  cfg.lambda = 0.0;
  cfg.t_noise = 200;
  const GeodesicResult r = solve_geodesic(oracle::random_vec(rng, 5), oracle::random_vec(rng, 5), f, sched, cfg);
  energy_log().push_back({"lambda0-linear", {r.initial_energy.total, r.final_energy.total}});
  const DiscretePath line = DiscretePath::linear(r.noisy.front(), r.noisy.back(), cfg.n_segments);
  double dev = 0.0;
  for (std::size_t i = 0; i < line.size(); ++i) dev = std::max(dev, (r.noisy[i] - line[i]).norm());

  // Perturbed start: the library optimizer against an independent plain Adam, step for step.
  GeodesicConfig c2 = cfg;
  c2.transport_momentum = false;
  DiscretePath path = DiscretePath::linear(oracle::random_vec(rng, 5), oracle::random_vec(rng, 5), 8);
  for (int i = 1; i < 8; ++i) path.interior(i) += oracle::random_vec(rng, 5, 0.5);
  oracle::PlainAdam ref{c2.adam.alpha, c2.adam.beta1, c2.adam.beta2, c2.adam.eps, {}, {}, 0};
  std::vector<Vec> x(path.points().begin() + 1, path.points().end() - 1);
  AdamState st = AdamState::zeros(x.size(), 5);
  double worst = 0.0;
  for (int step = 0; step < 500; ++step) {
    const EnergyGradient eg = energy_and_gradient(path, f, c2);
    riemannian_adam_step(path, eg.grads, eg.node_scores, st, c2);
    ref.step(x, eg.grads);
    for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, (path[i + 1] - x[i]).norm());
  }
  return {dev <= 1e-6 && worst <= 1e-12,
          "line_dev=" + fmt("%.3g", dev) + " iters=" + std::to_string(r.iterations) +
              " adam_trace_dev=" + fmt("%.3g", worst) + " (500 steps)"};
}

Outcome sphere_interpolation() {
  const json m = run_interpolate();
  if (m.is_null()) return {false, "interpolate command failed"};
  const json& geo = m["methods"]["geodesic"];
  const json& lin = m["methods"]["lerp"];
  const double arc = m["great_circle_arc"].get<double>();
  const double max_dev = geo["max_radial_deviation"].get<double>();
  const double len = geo["path_length"].get<double>();
  const double lerp_mid = lin["radial_deviation"][4].get<double>();
  const double chord_mid = 1.0 - std::cos(arc / 2.0);
  const bool dev_ok = max_dev <= 0.05;
  const bool lerp_ok = std::abs(lerp_mid - chord_mid) <= 1e-9 && std::abs(lerp_mid - (1.0 - std::cos(std::numbers::pi / 4))) <= 0.01;
  const double ratio = len / arc;
  const bool len_ok = std::abs(ratio - 1.0) <= 0.05;
  energy_log().push_back({"sphere-interpolate", {geo["initial_energy"]["total"].get<double>(),
                                                 geo["final_energy"]["total"].get<double>()}});
  return {dev_ok && lerp_ok && len_ok,
          "pair=(" + pair_args_a() + "," + pair_args_b() + ") arc=" + fmt("%.4f", arc) + " max_dev=" +
              fmt("%.4f", max_dev) + (dev_ok ? "" : "[x]") + " lerp_mid=" + fmt("%.4f", lerp_mid) +
              (lerp_ok ? "" : "[x]") + " length=" + fmt("%.4f", len) + " ratio=" + fmt("%.4f", ratio) +
              (len_ok ? "" : "[x]") + " iters=" + std::to_string(geo["iterations"].get<int>())};
}

Outcome score_alignment() {
  const SphereRun& r = sphere_run();
  if (!r.ok) return {false, "gen-sphere failed"};
  const Dataset ds = load_dataset(r.dir / "out" / "dataset.json");
  const Embedding emb = Embedding::from_json(json::parse(slurp(r.dir / "out" / "embedding.json")));
  const NoiseSchedule sched = NoiseSchedule::linear();
  EmpiricalDiffusionField f(ds, sched);
  const int t = sched.timestep_for_alpha_bar(0.5);
  const AlignmentStats st = score_normal_alignment(f, SphereSpec{}, emb, 500, t, sched, {-0.05, 0.05}, 707);
  return {st.defined && st.valid == 500 && st.mean_abs_cos >= 0.95,
          "probes=500 t=" + std::to_string(t) + " alpha_bar=" + fmt("%.4f", sched.alpha_bar(t)) +
              " mean_abs_cos=" + fmt("%.4f", st.mean_abs_cos) + " min_abs_cos=" + fmt("%.4f", st.min_abs_cos)};
}

Outcome extrapolation() {
  const json m = run_extrapolate();
  if (m.is_null()) return {false, "extrapolate command failed"};
  const json& g = m["methods"]["guided"];
  const json& lin = m["methods"]["linear"];
  if (g["radial_deviation"].size() != 10) return {false, "expected 10 guided steps"};
  const double guided_max = g["max_radial_deviation"].get<double>();
  const double linear_final = lin["final_radial_deviation"].get<double>();
  double gap = 0.0;

  // epsilon = 0 rerun: the guided walk must coincide with the straight continuation.
  const SphereRun& r = sphere_run();
  const Dataset ds = load_dataset(r.dir / "out" / "dataset.json");
  const NoiseSchedule sched = NoiseSchedule::linear();
  EmpiricalDiffusionField f(ds, sched);
  GeodesicConfig gcfg;
  gcfg.rng_seed = derive_seed(0, "geodesic");
  gcfg.max_iters = 50;
  ExtrapConfig ecfg;
  ecfg.num_steps = 10;
  ecfg.epsilon_guide = 0.0;
  const ExtrapolationResult e = extrapolate_after_geodesic(ds.point(r.a), ds.point(r.b), f, sched, gcfg, ecfg);
  const std::vector<Vec> straight = linear_continuation(e.geodesic.noisy, ecfg);
  for (std::size_t k = 0; k < straight.size(); ++k) gap = std::max(gap, (e.noisy_continuation[k] - straight[k]).norm());
  energy_log().push_back({"extrapolate-geodesic", {e.geodesic.initial_energy.total, e.geodesic.final_energy.total}});

  const bool g_ok = guided_max <= 0.10;
  const bool l_ok = linear_final > 0.20;
  const bool e_ok = gap <= 1e-9 && straight.size() == 10;
  return {g_ok && l_ok && e_ok, "guided_max_dev=" + fmt("%.4f", guided_max) + (g_ok ? "" : "[x]") +
                                    " linear_final_dev=" + fmt("%.4f", linear_final) + (l_ok ? "" : "[x]") +
                                    " eps0_gap=" + fmt("%.3g", gap) + (e_ok ? "" : "[x]")};
}

Outcome determinism() {
  const SphereRun& r = sphere_run();
  if (run_interpolate().is_null() || run_extrapolate().is_null()) return {false, "pipeline failed"};
  const fs::path out = r.dir / "out";
  if (cli({"score-check", "--config", r.config.string()}) != kExitOk) return {false, "score-check failed"};
  if (cli({"report", out.string()}) != kExitOk) return {false, "report failed"};
  const auto before = json_snapshot(out);
  const bool reran = cli({"gen-sphere", "--config", r.config.string()}) == kExitOk &&
                     cli({"score-check", "--config", r.config.string()}) == kExitOk &&
                     cli({"interpolate", "--config", r.config.string(), "--a", pair_args_a(), "--b", pair_args_b(),
                          "--methods", "geodesic,lerp,slerp"}) == kExitOk &&
                     cli({"extrapolate", "--config", r.config.string(), "--a", pair_args_a(), "--b", pair_args_b()}) ==
                         kExitOk &&
                     cli({"report", out.string()}) == kExitOk;
  if (!reran) return {false, "rerun failed"};
  const auto after = json_snapshot(out);
  std::string diffs;
  for (const auto& [name, text] : before) {
    if (!after.count(name) || after.at(name) != text) diffs += " " + name;
  }
  return {diffs.empty() && before.size() == after.size(),
          "json_files=" + std::to_string(before.size()) + (diffs.empty() ? " all byte-identical" : " differ:" + diffs)};
}

Outcome energy_monotonicity() {
  const SphereRun& r = sphere_run();
  if (!r.ok) return {false, "gen-sphere failed"};
  const Dataset ds = load_dataset(r.dir / "out" / "dataset.json");
  const NoiseSchedule sched = NoiseSchedule::linear();
  EmpiricalDiffusionField f(ds, sched);
  // Each seed re-noises the clean endpoints with its own shared noise, re-optimizes,
  // and the converged path's energy is re-evaluated from scratch.
  std::vector<double> converged, path_renoised;
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    GeodesicConfig cfg;
    cfg.rng_seed = seed;
    const GeodesicResult g = solve_geodesic(ds.point(r.a), ds.point(r.b), f, sched, cfg);
    energy_log().push_back({"seed" + std::to_string(seed), {g.initial_energy.total, g.final_energy.total}});
    GeodesicConfig eval = cfg;
    eval.lambda = g.lambda;
    converged.push_back(discrete_energy(g.noisy, f, eval).total);
    // Informational: the whole denoised path pushed back through the same noise.
    std::vector<Vec> pts;
    const double sa = std::sqrt(sched.alpha_bar(cfg.t_noise));
    const double sg = sched.sigma(cfg.t_noise);
    for (const Vec& x : g.denoised.points()) pts.push_back(sa * x + sg * g.noise);
    path_renoised.push_back(discrete_energy(DiscretePath(pts), f, eval).total);
  }
  const auto spread = [](const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return (*hi - *lo) / *lo;
  };
  bool mono = true;
  std::string bad;
  for (const auto& [name, e] : energy_log()) {
    if (!(e.second <= e.first)) {
      mono = false;
      bad += " " + name;
    }
  }
  const double s_conv = spread(converged);
  return {mono && s_conv <= 0.01, "instances=" + std::to_string(energy_log().size()) +
                                      (mono ? " final<=initial on all" : " increased:" + bad) +
                                      " seeds=3 converged_spread=" + fmt("%.4f", s_conv) +
                                      " (whole-path renoise spread " + fmt("%.4f", spread(path_renoised)) + ")"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"metric validity", metric_validity},
      {"Sherman-Morrison inverse", sherman_morrison},
      {"score oracle agreement", score_oracles},
      {"energy gradient check", energy_gradient},
      {"Euclidean degeneration", euclidean_degeneration},
      {"sphere interpolation", sphere_interpolation},
      {"score-normal alignment", score_alignment},
      {"extrapolation", extrapolation},
      {"determinism", determinism},
      {"energy monotonicity", energy_monotonicity},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failed;
    std::printf("[%s] %2zu %-26s %6.1fs  %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::error_code ec;
  fs::remove_all(sphere_run().dir, ec);
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
