#include "scoregeo/synthbench.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "scoregeo/error.hpp"

namespace scoregeo {

void SphereSpec::validate() const {
  if (!(radius > 0.0)) throw ArgumentError("SphereSpec: radius must be > 0");
  if (std::abs(vmf_mean.norm() - 1.0) > 1e-12) throw ArgumentError("SphereSpec: vmf_mean must be a unit vector");
  if (!(vmf_kappa >= 0.0)) throw ArgumentError("SphereSpec: kappa must be >= 0");
  if (ambient_dim < 3) throw ArgumentError("SphereSpec: ambient_dim must be >= 3");
  if (num_samples < 1) throw ArgumentError("SphereSpec: num_samples must be >= 1");
}

std::vector<Vec3> sample_vmf(const Vec3& mean, double kappa, int count, std::uint64_t seed) {
  if (count < 1) throw ArgumentError("sample_vmf: count must be >= 1");
  if (!(kappa >= 0.0)) throw ArgumentError("sample_vmf: kappa must be >= 0");
  const double mn = mean.norm();
  if (!(mn > 0.0)) throw ArgumentError("sample_vmf: zero mean direction");
  const Vec3 mu = mean / mn;

  // Householder reflection H with H e3 = mu.
  const Vec3 e3(0.0, 0.0, 1.0);
  Vec3 h = e3 - mu;
  const bool identity = h.squaredNorm() < 1e-300;
  if (!identity) h.normalize();
  auto reflect = [&](const Vec3& x) -> Vec3 { return identity ? x : Vec3(x - 2.0 * h.dot(x) * h); };

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    const double u = uni(rng);
    // Inverse CDF of the polar cosine w on S^2: density proportional to exp(kappa w).
    double w;
    if (kappa == 0.0) {
      w = 2.0 * u - 1.0;
    } else {
      w = 1.0 + std::log(u + (1.0 - u) * std::exp(-2.0 * kappa)) / kappa;
    }
    w = std::clamp(w, -1.0, 1.0);
    const double phi = 2.0 * std::numbers::pi * uni(rng);
    const double r = std::sqrt(std::max(0.0, 1.0 - w * w));
    Vec3 x = reflect(Vec3(r * std::cos(phi), r * std::sin(phi), w));
    out.push_back(x.normalized());
  }
  return out;
}

Vec Embedding::embed(const Vec3& a) const { return basis * a + offset; }

Vec3 Embedding::unembed(const Vec& x) const {
  if (x.size() != basis.rows()) throw ArgumentError("Embedding::unembed: dimension mismatch");
  return basis.transpose() * (x - offset);
}

json Embedding::to_json() const {
  json q = json::array();
  for (Eigen::Index i = 0; i < basis.rows(); ++i) {
    for (Eigen::Index k = 0; k < 3; ++k) q.push_back(basis(i, k));
  }
  return json{{"Q", std::move(q)}, {"offset", vec_to_json(offset)}, {"seed", seed}};
}

Embedding Embedding::from_json(const json& j) {
  try {
    Embedding e;
    const Vec q = vec_from_json(j.at("Q"), "embedding Q");
    e.offset = vec_from_json(j.at("offset"), "embedding offset");
    e.seed = j.value("seed", std::uint64_t{0});
    const auto n = e.offset.size();
    if (q.size() != 3 * n || n < 3) throw ParseError("embedding: Q must hold 3 * N values");
    e.basis.resize(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index k = 0; k < 3; ++k) e.basis(i, k) = q[3 * i + k];
    }
    return e;
  } catch (const json::exception& ex) {
    throw ParseError(std::string("embedding JSON: ") + ex.what());
  }
}

Embedding make_embedding(int ambient_dim, std::uint64_t seed, double offset_value) {
  if (ambient_dim < 3) throw ArgumentError("make_embedding: ambient dimension must be >= 3");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd a(ambient_dim, 3);
  while (true) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      for (Eigen::Index k = 0; k < 3; ++k) a(i, k) = normal(rng);
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    const Eigen::MatrixXd r = qr.matrixQR().topRows(3).triangularView<Eigen::Upper>();
    if (r.diagonal().cwiseAbs().minCoeff() < 1e-8) continue;  // rank-deficient draw
    Embedding e;
    e.basis = qr.householderQ() * Eigen::MatrixXd::Identity(ambient_dim, 3);
    e.offset = Vec::Constant(ambient_dim, offset_value);
    e.seed = seed;
    return e;
  }
}

Dataset make_sphere_dataset(const SphereSpec& spec, const Embedding& emb) {
  spec.validate();
  if (emb.dim() != spec.ambient_dim) throw ArgumentError("make_sphere_dataset: embedding dimension mismatch");
  const auto samples = sample_vmf(spec.vmf_mean, spec.vmf_kappa, spec.num_samples, spec.sample_seed);
  Dataset ds;
  ds.name = "vmf_sphere";
  ds.seed = static_cast<std::int64_t>(spec.sample_seed);
  ds.points.resize(spec.num_samples, spec.ambient_dim);
  for (int k = 0; k < spec.num_samples; ++k) {
    ds.points.row(k) = emb.embed(spec.radius * samples[static_cast<std::size_t>(k)]).transpose();
  }
  return ds;
}

Vec3 great_circle(const Vec3& pa, const Vec3& pb, double tau) {
  const double r = pa.norm();
  if (!(r > 0.0)) throw ArgumentError("great_circle: zero-norm endpoint");
  const Vec3 ua = pa / r;
  const Vec3 ub = pb / pb.norm();
  const double c = std::clamp(ua.dot(ub), -1.0, 1.0);
  if (c <= -1.0 + 1e-12) throw ArgumentError("great_circle: antipodal endpoints have no unique geodesic");
  if (tau == 0.0) return pa;
  const double theta = std::acos(c);
  if (theta < 1e-15) return pa;
  const double st = std::sin(theta);
  Vec3 u = (std::sin((1.0 - tau) * theta) / st) * ua + (std::sin(tau * theta) / st) * ub;
  return r * u.normalized();
}

double arc_length(const Vec3& pa, const Vec3& pb) {
  const double r = pa.norm();
  const Vec3 ua = pa / r;
  const Vec3 ub = pb / pb.norm();
  const double c = std::clamp(ua.dot(ub), -1.0, 1.0);
  if (c <= -1.0 + 1e-12) throw ArgumentError("arc_length: antipodal endpoints have no unique geodesic");
  // atan2 form keeps accuracy for small and large angles alike.
  return r * std::atan2(ua.cross(ub).norm(), ua.dot(ub));
}

AlignmentStats score_normal_alignment(const ScoreField& field, const SphereSpec& spec, const Embedding& emb,
                                      int probes, int t, const NoiseSchedule& sched,
                                      std::pair<double, double> offset_range, std::uint64_t seed) {
  if (probes < 1) throw ArgumentError("score_normal_alignment: probes must be >= 1");
  if (!(offset_range.first <= offset_range.second)) throw ArgumentError("score_normal_alignment: bad offset range");
  const double ab = sched.alpha_bar(t);
  const double sab = std::sqrt(ab);
  const double sigma = std::sqrt(1.0 - ab);
  const Vec center = sab * emb.offset;

  const auto dirs = sample_vmf(spec.vmf_mean, spec.vmf_kappa, probes, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> uni(offset_range.first, offset_range.second);
  std::normal_distribution<double> normal;

  AlignmentStats st;
  st.probes = probes;
  st.min_abs_cos = std::numeric_limits<double>::infinity();
  st.min_normal_fraction = std::numeric_limits<double>::infinity();
  double sum_cos = 0.0;
  double sum_nf = 0.0;
  for (int k = 0; k < probes; ++k) {
    const double d = uni(rng);
    Vec x = sab * emb.embed(spec.radius * (1.0 + d) * dirs[static_cast<std::size_t>(k)]);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double e = normal(rng);
      x[i] += sigma * e;
    }
    const Vec s = field.score(x, t);
    const double ns = s.norm();
    const Vec radial = x - center;
    const double nr = radial.norm();
    if (!(ns > 0.0) || !(nr > 0.0)) continue;

    const double c = std::abs(s.dot(radial)) / (ns * nr);
    Vec3 u = emb.basis.transpose() * radial;
    double nf = 1.0;
    if (u.norm() > 0.0) {
      u.normalize();
      const Vec3 sp = emb.basis.transpose() * s;
      const Vec tangent = emb.basis * (sp - u * u.dot(sp));
      nf = std::sqrt(std::max(0.0, 1.0 - tangent.squaredNorm() / (ns * ns)));
    }
    ++st.valid;
    sum_cos += c;
    sum_nf += nf;
    st.min_abs_cos = std::min(st.min_abs_cos, c);
    st.min_normal_fraction = std::min(st.min_normal_fraction, nf);
    st.histogram[static_cast<std::size_t>(std::min(9, static_cast<int>(c * 10.0)))] += 1;
  }
  st.defined = st.valid > 0;
  if (st.defined) {
    st.mean_abs_cos = sum_cos / st.valid;
    st.mean_normal_fraction = sum_nf / st.valid;
  } else {
    st.min_abs_cos = st.min_normal_fraction = std::numeric_limits<double>::quiet_NaN();
    st.mean_abs_cos = st.mean_normal_fraction = std::numeric_limits<double>::quiet_NaN();
  }
  return st;
}

std::vector<double> radial_deviation(std::span<const Vec> points, const Embedding& emb, double radius) {
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    if (p.size() != emb.dim()) throw ArgumentError("radial_deviation: dimension mismatch");
    out.push_back(std::abs((p - emb.offset).norm() - radius) / radius);
  }
  return out;
}

double psnr(const Vec& a, const Vec& b, double peak) {
  require_same_dim(a, b, "psnr");
  if (!(peak > 0.0)) throw ArgumentError("psnr: peak must be > 0");
  const double mse = (a - b).squaredNorm() / static_cast<double>(a.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

std::pair<Eigen::Index, Eigen::Index> pick_endpoint_pair(const Dataset& ds, const Embedding& emb,
                                                         const SphereSpec& spec, double angle) {
  if (ds.size() < 2) throw ArgumentError("pick_endpoint_pair: need at least two points");
  const Vec3 mu = spec.vmf_mean.normalized();
  Vec3 e = mu.unitOrthogonal();
  const Vec3 ta = std::cos(angle / 2) * mu + std::sin(angle / 2) * e;
  const Vec3 tb = std::cos(angle / 2) * mu - std::sin(angle / 2) * e;

  std::vector<Vec3> dirs(static_cast<std::size_t>(ds.size()));
  for (Eigen::Index i = 0; i < ds.size(); ++i) dirs[static_cast<std::size_t>(i)] = emb.unembed(ds.point(i)).normalized();

  const std::size_t k = std::min<std::size_t>(25, dirs.size());
  auto nearest = [&](const Vec3& target) {
    std::vector<Eigen::Index> idx(dirs.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<Eigen::Index>(i);
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                      [&](Eigen::Index a, Eigen::Index b) {
                        const double da = dirs[static_cast<std::size_t>(a)].dot(target);
                        const double db = dirs[static_cast<std::size_t>(b)].dot(target);
                        return da != db ? da > db : a < b;
                      });
    idx.resize(k);
    return idx;
  };
  const auto ca = nearest(ta);
  const auto cb = nearest(tb);
  std::pair<Eigen::Index, Eigen::Index> best{ca.front(), cb.front()};
  double best_err = std::numeric_limits<double>::infinity();
  for (auto a : ca) {
    for (auto b : cb) {
      if (a == b) continue;
      const auto& da = dirs[static_cast<std::size_t>(a)];
      const auto& db = dirs[static_cast<std::size_t>(b)];
      const double err = std::abs(std::atan2(da.cross(db).norm(), da.dot(db)) - angle);
      if (err < best_err) {
        best_err = err;
        best = {a, b};
      }
    }
  }
  return best;
}

}  // namespace scoregeo
