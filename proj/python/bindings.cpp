#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "scoregeo/commands.hpp"
#include "scoregeo/diffusion.hpp"
#include "scoregeo/error.hpp"
#include "scoregeo/geodesic.hpp"
#include "scoregeo/pathnav.hpp"
#include "scoregeo/scorefield.hpp"
#include "scoregeo/synthbench.hpp"
#include "scoregeo/vecspace.hpp"

namespace py = pybind11;
using namespace scoregeo;

namespace {

Eigen::MatrixXd rows_of(const std::vector<Vec>& pts) {
  if (pts.empty()) return Eigen::MatrixXd(0, 0);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(pts.size()), pts.front().size());
  for (std::size_t i = 0; i < pts.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();
  return m;
}

std::vector<Vec> points_of(const Eigen::MatrixXd& m) {
  std::vector<Vec> pts;
  for (Eigen::Index i = 0; i < m.rows(); ++i) pts.push_back(m.row(i).transpose());
  return pts;
}

Dataset dataset_of(const Eigen::MatrixXd& points) {
  Dataset ds;
  ds.points = points;
  ds.validate();
  return ds;
}

py::dict trace_dict(const std::vector<EnergyTraceRow>& trace) {
  std::vector<int> iter;
  std::vector<double> total, data, smooth, mono;
  for (const auto& r : trace) {
    iter.push_back(r.iter);
    total.push_back(r.total);
    data.push_back(r.data);
    smooth.push_back(r.smooth);
    mono.push_back(r.mono);
  }
  py::dict d;
  d["iter"] = iter;
  d["total"] = total;
  d["data"] = data;
  d["smooth"] = smooth;
  d["mono"] = mono;
  return d;
}

py::dict geodesic_dict(const GeodesicResult& r) {
  py::dict d;
  d["noisy"] = rows_of(r.noisy.points());
  d["denoised"] = rows_of(r.denoised.points());
  d["noise"] = r.noise;
  d["lambda"] = r.lambda;
  d["iterations"] = r.iterations;
  d["converged"] = r.converged;
  d["initial_energy"] = r.initial_energy.total;
  d["final_energy"] = r.final_energy.total;
  d["trace"] = trace_dict(r.trace);
  return d;
}

}  // namespace

PYBIND11_MODULE(_scoregeo, m) {
  m.doc() = "Score-metric geodesics between data points of a diffusion model";

  py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<EvaluationError>(m, "EvaluationError", PyExc_ArithmeticError);
  py::register_exception<DegenerateDirectionError>(m, "DegenerateDirectionError", PyExc_ArithmeticError);

  m.def("metric_inner", [](const Vec& u, const Vec& v, const Vec& s, double lam) {
    return metric_inner(u, v, SteinMetric(s, lam));
  }, py::arg("u"), py::arg("v"), py::arg("score"), py::arg("lam"));
  m.def("metric_norm_sq", [](const Vec& v, const Vec& s, double lam) { return metric_norm_sq(v, SteinMetric(s, lam)); },
        py::arg("v"), py::arg("score"), py::arg("lam"));
  m.def("metric_apply", [](const Vec& v, const Vec& s, double lam) { return metric_apply(v, SteinMetric(s, lam)); },
        py::arg("v"), py::arg("score"), py::arg("lam"));
  m.def("metric_inverse_apply",
        [](const Vec& b, const Vec& s, double lam) { return metric_inverse_apply(b, SteinMetric(s, lam)); },
        py::arg("b"), py::arg("score"), py::arg("lam"));

  py::class_<NoiseSchedule>(m, "NoiseSchedule")
      .def(py::init<std::vector<double>>(), py::arg("alpha_bar"))
      .def_static("linear", &NoiseSchedule::linear, py::arg("T") = 1000, py::arg("alpha_bar_final") = 0.02)
      .def_static("cosine", &NoiseSchedule::cosine, py::arg("T") = 1000, py::arg("s") = 0.008,
                  py::arg("max_beta") = 0.999)
      .def_property_readonly("T", &NoiseSchedule::T)
      .def("alpha_bar", &NoiseSchedule::alpha_bar, py::arg("t"))
      .def("sigma", &NoiseSchedule::sigma, py::arg("t"))
      .def("timestep_for_alpha_bar", &NoiseSchedule::timestep_for_alpha_bar, py::arg("target"));

  py::class_<ScoreField, std::shared_ptr<ScoreField>>(m, "ScoreField")
      .def_property_readonly("kind", &ScoreField::kind)
      .def_property_readonly("dimension", &ScoreField::dimension)
      .def("score", &ScoreField::score, py::arg("x"), py::arg("t") = 0)
      .def("log_density", &ScoreField::log_density, py::arg("x"), py::arg("t") = 0);

  py::class_<IsotropicGaussianField, ScoreField, std::shared_ptr<IsotropicGaussianField>>(m, "IsotropicGaussianField")
      .def(py::init<Vec, double, std::optional<NoiseSchedule>>(), py::arg("mean"), py::arg("variance"),
           py::arg("schedule") = std::nullopt);

  py::class_<GaussianMixtureField, ScoreField, std::shared_ptr<GaussianMixtureField>>(m, "GaussianMixtureField")
      .def(py::init([](const std::vector<double>& weights, const Eigen::MatrixXd& means,
                       const std::vector<double>& variances, std::optional<NoiseSchedule> sched) {
             if (weights.size() != static_cast<std::size_t>(means.rows()) || weights.size() != variances.size()) {
               throw ArgumentError("GaussianMixtureField: weights, means and variances must have equal length");
             }
             std::vector<MixtureComponent> comps;
             for (std::size_t j = 0; j < weights.size(); ++j) {
               comps.push_back({weights[j], means.row(static_cast<Eigen::Index>(j)).transpose(), variances[j]});
             }
             return std::make_shared<GaussianMixtureField>(std::move(comps), std::move(sched));
           }),
           py::arg("weights"), py::arg("means"), py::arg("variances"), py::arg("schedule") = std::nullopt);

  py::class_<EmpiricalDiffusionField, ScoreField, std::shared_ptr<EmpiricalDiffusionField>>(m,
                                                                                          "EmpiricalDiffusionField")
      .def(py::init([](const Eigen::MatrixXd& points, const NoiseSchedule& sched, double scale) {
             return std::make_shared<EmpiricalDiffusionField>(dataset_of(points), sched, scale);
           }),
           py::arg("points"), py::arg("schedule"), py::arg("variance_scale") = 1.0)
      .def("responsibilities", &EmpiricalDiffusionField::responsibilities, py::arg("x"), py::arg("t"));

  m.def("forward_noise", &forward_noise, py::arg("x0"), py::arg("eps"), py::arg("t"), py::arg("schedule"));
  m.def("tweedie_x0", &tweedie_x0, py::arg("xt"), py::arg("score"), py::arg("t"), py::arg("schedule"));
  m.def("denoise_to_zero", &denoise_to_zero, py::arg("xt"), py::arg("t"), py::arg("field"), py::arg("schedule"),
        py::arg("steps") = 20);

  py::class_<AdamParams>(m, "AdamParams")
      .def(py::init<>())
      .def_readwrite("alpha", &AdamParams::alpha)
      .def_readwrite("beta1", &AdamParams::beta1)
      .def_readwrite("beta2", &AdamParams::beta2)
      .def_readwrite("eps", &AdamParams::eps);

  py::class_<GeodesicConfig>(m, "GeodesicConfig")
      .def(py::init<>())
      .def_readwrite("lam", &GeodesicConfig::lambda)
      .def_readwrite("lambda_scale", &GeodesicConfig::lambda_scale)
      .def_readwrite("n_segments", &GeodesicConfig::n_segments)
      .def_readwrite("t_noise", &GeodesicConfig::t_noise)
      .def_readwrite("lambda_smooth", &GeodesicConfig::lambda_smooth)
      .def_readwrite("lambda_mono", &GeodesicConfig::lambda_mono)
      .def_readwrite("max_iters", &GeodesicConfig::max_iters)
      .def_readwrite("patience", &GeodesicConfig::patience)
      .def_readwrite("rel_tol", &GeodesicConfig::rel_tol)
      .def_readwrite("adam", &GeodesicConfig::adam)
      .def_readwrite("score_at_midpoints", &GeodesicConfig::score_at_midpoints)
      .def_readwrite("score_jacobian", &GeodesicConfig::score_jacobian)
      .def_readwrite("transport_momentum", &GeodesicConfig::transport_momentum)
      .def_readwrite("denoise_steps", &GeodesicConfig::denoise_steps)
      .def_readwrite("rng_seed", &GeodesicConfig::rng_seed);

  m.def("discrete_energy",
        [](const Eigen::MatrixXd& path, const ScoreField& field, const GeodesicConfig& cfg) {
          return discrete_energy(DiscretePath(points_of(path)), field, cfg).total;
        },
        py::arg("path"), py::arg("field"), py::arg("config"));
  m.def("path_length",
        [](const Eigen::MatrixXd& path, const ScoreField& field, const GeodesicConfig& cfg) {
          return path_length(DiscretePath(points_of(path)), field, cfg);
        },
        py::arg("path"), py::arg("field"), py::arg("config"));
  m.def("solve_geodesic",
        [](const Vec& xa, const Vec& xb, const ScoreField& field, const NoiseSchedule& sched,
           const GeodesicConfig& cfg) { return geodesic_dict(solve_geodesic(xa, xb, field, sched, cfg)); },
        py::arg("xa"), py::arg("xb"), py::arg("field"), py::arg("schedule"), py::arg("config") = GeodesicConfig{});
  m.def("interpolate",
        [](const Vec& p, const Vec& q, const ScoreField& field, const NoiseSchedule& sched,
           const GeodesicConfig& cfg) { return rows_of(interpolate(p, q, field, sched, cfg).frames); },
        py::arg("p"), py::arg("q"), py::arg("field"), py::arg("schedule"), py::arg("config") = GeodesicConfig{});
  m.def("lerp_frames", [](const Vec& p, const Vec& q, int n) { return rows_of(lerp_frames(p, q, n)); },
        py::arg("p"), py::arg("q"), py::arg("n_segments") = 8);
  m.def("slerp_frames",
        [](const Vec& p, const Vec& q, int n, const Vec& c) { return rows_of(slerp_frames(p, q, n, c)); },
        py::arg("p"), py::arg("q"), py::arg("n_segments"), py::arg("center"));

  py::class_<ExtrapConfig>(m, "ExtrapConfig")
      .def(py::init<>())
      .def_readwrite("epsilon_guide", &ExtrapConfig::epsilon_guide)
      .def_readwrite("beta_momentum", &ExtrapConfig::beta_momentum)
      .def_readwrite("step_size", &ExtrapConfig::step_size)
      .def_readwrite("num_steps", &ExtrapConfig::num_steps)
      .def_readwrite("init_window", &ExtrapConfig::init_window)
      .def_readwrite("init_decay", &ExtrapConfig::init_decay);

  m.def("extrapolate",
        [](const Eigen::MatrixXd& path, const ScoreField& field, int t, const ExtrapConfig& cfg) {
          return rows_of(extrapolate(DiscretePath(points_of(path)), field, t, cfg));
        },
        py::arg("path"), py::arg("field"), py::arg("t"), py::arg("config") = ExtrapConfig{});
  m.def("linear_continuation",
        [](const Eigen::MatrixXd& path, const ExtrapConfig& cfg) {
          return rows_of(linear_continuation(DiscretePath(points_of(path)), cfg));
        },
        py::arg("path"), py::arg("config") = ExtrapConfig{});

  py::class_<SphereSpec>(m, "SphereSpec")
      .def(py::init<>())
      .def_readwrite("radius", &SphereSpec::radius)
      .def_readwrite("vmf_mean", &SphereSpec::vmf_mean)
      .def_readwrite("vmf_kappa", &SphereSpec::vmf_kappa)
      .def_readwrite("ambient_dim", &SphereSpec::ambient_dim)
      .def_readwrite("num_samples", &SphereSpec::num_samples)
      .def_readwrite("offset", &SphereSpec::offset)
      .def_readwrite("embed_seed", &SphereSpec::embed_seed)
      .def_readwrite("sample_seed", &SphereSpec::sample_seed);

  py::class_<Embedding>(m, "Embedding")
      .def_readonly("basis", &Embedding::basis)
      .def_readonly("offset", &Embedding::offset)
      .def("embed", &Embedding::embed, py::arg("a"))
      .def("unembed", &Embedding::unembed, py::arg("x"));

  m.def("make_embedding", &make_embedding, py::arg("ambient_dim"), py::arg("seed"), py::arg("offset_value") = 0.5);
  m.def("sample_vmf", [](const Vec3& mean, double kappa, int count, std::uint64_t seed) {
    Eigen::MatrixXd out(count, 3);
    const auto xs = sample_vmf(mean, kappa, count, seed);
    for (int i = 0; i < count; ++i) out.row(i) = xs[static_cast<std::size_t>(i)].transpose();
    return out;
  }, py::arg("mean"), py::arg("kappa"), py::arg("count"), py::arg("seed"));
  m.def("make_sphere_dataset",
        [](const SphereSpec& spec, const Embedding& emb) { return make_sphere_dataset(spec, emb).points; },
        py::arg("spec"), py::arg("embedding"));
  m.def("radial_deviation",
        [](const Eigen::MatrixXd& pts, const Embedding& emb, double radius) {
          const std::vector<Vec> p = points_of(pts);
          return radial_deviation(p, emb, radius);
        },
        py::arg("points"), py::arg("embedding"), py::arg("radius") = 1.0);
  m.def("score_normal_alignment",
        [](const ScoreField& field, const SphereSpec& spec, const Embedding& emb, int probes, int t,
           const NoiseSchedule& sched, std::pair<double, double> range, std::uint64_t seed) {
          const AlignmentStats st = score_normal_alignment(field, spec, emb, probes, t, sched, range, seed);
          py::dict d;
          d["probes"] = st.probes;
          d["valid"] = st.valid;
          d["defined"] = st.defined;
          d["mean_abs_cos"] = st.mean_abs_cos;
          d["min_abs_cos"] = st.min_abs_cos;
          d["mean_normal_fraction"] = st.mean_normal_fraction;
          return d;
        },
        py::arg("field"), py::arg("spec"), py::arg("embedding"), py::arg("probes"), py::arg("t"),
        py::arg("schedule"), py::arg("offset_range") = std::pair<double, double>{-0.05, 0.05},
        py::arg("seed") = 0);

  m.def("run_cli", [](std::vector<std::string> args) {
    args.insert(args.begin(), "scoregeo");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ostringstream out, err;
    int code = 0;
    {
      py::gil_scoped_release release;
      code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"), "Run a command line (without the program name); returns (exit_code, stdout, stderr).");
}
