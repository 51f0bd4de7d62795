#include <algorithm>
#include <cstring>

#include "doctest.h"
#include "oracles.hpp"
#include "scoregeo/diffusion.hpp"
#include "scoregeo/error.hpp"
#include "scoregeo/pathnav.hpp"

using namespace scoregeo;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

double cosine(const Vec& a, const Vec& b) { return a.dot(b) / (a.norm() * b.norm()); }

}  // namespace

TEST_CASE("lerp and slerp examples") {
  const double R = 2.5;
  const Vec p = vec({R, 0, 0});
  const Vec q = vec({0, R, 0});
  for (double tau : {0.0, 1.0}) {
    CHECK(lerp(p, q, tau) == (tau == 0.0 ? p : q));
    CHECK(slerp(p, q, tau) == (tau == 0.0 ? p : q));
  }
  const Vec s = slerp(p, q, 0.5);
  CHECK((s - vec({R / std::sqrt(2.0), R / std::sqrt(2.0), 0})).norm() <= 1e-12);
  const Vec l = lerp(p, q, 0.5);
  CHECK((l - vec({R / 2, R / 2, 0})).norm() <= 1e-15);
  CHECK(l.norm() == doctest::Approx(R / std::sqrt(2.0)));

  CHECK_THROWS_AS(slerp(vec({0, 0, 0}), q, 0.5), ArgumentError);
  CHECK_THROWS_AS(slerp(p, -p, 0.5), ArgumentError);
  CHECK_THROWS_AS(lerp(p, vec({1, 2}), 0.5), ArgumentError);
}

TEST_CASE("slerp norm is the linear blend of the endpoint norms and the angle is uniform") {
  std::mt19937_64 rng(1);
  for (int k = 0; k < 100; ++k) {
    const Vec p = oracle::random_vec(rng, 6);
    const Vec q = oracle::random_vec(rng, 6, 2.0);
    const double tau = oracle::uniform(rng, 0.0, 1.0);
    const Vec s = slerp(p, q, tau);
    CHECK(std::abs(s.norm() - ((1 - tau) * p.norm() + tau * q.norm())) <= 1e-9);
    const double theta = std::acos(cosine(p, q));
    CHECK(std::acos(std::clamp(cosine(p, s), -1.0, 1.0)) == doctest::Approx(tau * theta).epsilon(1e-7));
  }
  const auto frames = slerp_frames(vec({1.5, 0.5}), vec({0.5, 1.5}), 4, vec({0.5, 0.5}));
  for (const auto& f : frames) CHECK((f - vec({0.5, 0.5})).norm() == doctest::Approx(1.0));
}

TEST_CASE("extrapolation with epsilon = 0 is a straight walk") {
  IsotropicGaussianField f(vec({0, 0, 0}), 1.0);
  const DiscretePath path = DiscretePath::linear(vec({0, 0, 0}), vec({1, 2, -1}), 8);
  ExtrapConfig cfg;
  cfg.epsilon_guide = 0.0;
  cfg.num_steps = 12;
  const auto out = extrapolate(path, f, 0, cfg);
  REQUIRE(out.size() == 12);
  const auto lin = linear_continuation(path, cfg);
  std::vector<Vec> all{path.back()};
  all.insert(all.end(), out.begin(), out.end());
  for (std::size_t i = 0; i < out.size(); ++i) CHECK((out[i] - lin[i]).norm() <= 1e-9);
  for (std::size_t i = 1; i < all.size(); ++i) {
    for (std::size_t j = i + 1; j < all.size(); ++j) {
      CHECK(cosine(all[i] - all[0], all[j] - all[0]) == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("every extrapolation step has length step_size") {
  std::mt19937_64 rng(2);
  GaussianMixtureField f({{0.5, vec({1, 1}), 0.5}, {0.5, vec({-1, 2}), 0.3}});
  const DiscretePath path = DiscretePath::linear(vec({0, 0}), vec({1, 0.5}), 6);
  ExtrapConfig cfg;
  cfg.num_steps = 15;
  cfg.step_size = 0.37;
  const auto out = extrapolate(path, f, 0, cfg);
  Vec prev = path.back();
  for (const auto& x : out) {
    CHECK(std::abs((x - prev).norm() - 0.37) <= 1e-12);
    prev = x;
  }
  // Default step is the mean segment length.
  ExtrapConfig dflt;
  const auto d = extrapolate(path, f, 0, dflt);
  CHECK((d[0] - path.back()).norm() == doctest::Approx(mean_segment_length(path)));
}

TEST_CASE("beta = 1 freezes the momentum at its initial value") {
  GaussianMixtureField f({{1.0, vec({0, 3}), 1.0}});
  const DiscretePath path = DiscretePath::linear(vec({0, 0}), vec({1, 0}), 4);
  ExtrapConfig cfg;
  cfg.beta_momentum = 1.0;
  cfg.epsilon_guide = 0.5;
  cfg.num_steps = 6;
  const auto out = extrapolate(path, f, 0, cfg);
  const double step = mean_segment_length(path);
  const Vec m0 = initial_direction(path, cfg, step);
  // Independent replay with a fixed momentum.
  Vec x = path.back();
  for (const auto& got : out) {
    Vec d = 0.5 * m0 + 0.5 * f.score(x, 0);
    d *= step / d.norm();
    x += d;
    CHECK((got - x).norm() <= 1e-12);
  }
}

TEST_CASE("initial direction uses recency weights over min(window, n/4) segments") {
  std::vector<Vec> pts{vec({0, 0}), vec({1, 0}), vec({2, 0}), vec({3, 0}), vec({4, 0}),
                       vec({5, 0}), vec({6, 0}), vec({6, 1}), vec({6, 3})};
  const DiscretePath path(pts);  // n = 8 -> window 2
  ExtrapConfig cfg;
  cfg.init_window = 3;
  cfg.init_decay = 0.5;
  const Vec m = initial_direction(path, cfg, 1.0);
  const Vec want = (1.0 * vec({0, 2}) + 0.5 * vec({0, 1})) / 1.5;
  CHECK((m - want.normalized()).norm() <= 1e-14);

  const DiscretePath stuck({vec({0, 0}), vec({1, 0}), vec({1, 0})});
  CHECK_THROWS_AS(initial_direction(stuck, cfg, 1.0), DegenerateDirectionError);
}

TEST_CASE("extrapolation validates and handles degenerate cases") {
  IsotropicGaussianField f(vec({0, 0}), 1.0);
  const DiscretePath path = DiscretePath::linear(vec({0, 0}), vec({1, 0}), 4);
  ExtrapConfig cfg;
  cfg.num_steps = 0;
  CHECK(extrapolate(path, f, 0, cfg).empty());
  cfg = ExtrapConfig{};
  cfg.epsilon_guide = 1.5;
  CHECK_THROWS_AS(extrapolate(path, f, 0, cfg), ArgumentError);
  cfg = ExtrapConfig{};
  cfg.step_size = 0.0;
  CHECK_THROWS_AS(extrapolate(path, f, 0, cfg), ArgumentError);
  cfg = ExtrapConfig{};
  cfg.beta_momentum = -0.1;
  CHECK_THROWS_AS(extrapolate(path, f, 0, cfg), ArgumentError);

  // Pure score guidance at the mode: the direction vanishes.
  GaussianMixtureField peak({{1.0, vec({1, 0}), 1.0}});
  cfg = ExtrapConfig{};
  cfg.epsilon_guide = 1.0;
  CHECK_THROWS_AS(extrapolate(path, peak, 0, cfg), DegenerateDirectionError);
}

TEST_CASE("pure score guidance climbs toward the data") {
  Dataset ds;
  ds.points.resize(40, 2);
  for (int j = 0; j < 40; ++j) {
    const double th = 2 * M_PI * j / 40;
    ds.points.row(j) << std::cos(th), std::sin(th);
  }
  const NoiseSchedule sched = NoiseSchedule::linear();
  EmpiricalDiffusionField f(ds, sched);
  const DiscretePath path = DiscretePath::linear(vec({0.2, 0.0}), vec({0.9, 0.1}), 4);
  ExtrapConfig cfg;
  cfg.epsilon_guide = 1.0;
  cfg.step_size = 0.02;
  cfg.num_steps = 10;
  const auto out = extrapolate(path, f, 20, cfg);
  auto nn = [&](const Vec& x) {
    double best = INFINITY;
    for (int j = 0; j < 40; ++j) best = std::min(best, (ds.point(j) - x).norm());
    return best;
  };
  // The score is taken at the image of the walk in the t = 20 marginal; compare in that frame.
  const double scale = std::sqrt(sched.alpha_bar(20));
  const double start = nn(path.back() / scale);
  double prev = start;
  double closest = start;
  for (const auto& x : out) {
    const double d = nn(x / scale);
    CHECK(d <= prev + cfg.step_size.value() / scale);
    prev = d;
    closest = std::min(closest, d);
  }
  CHECK(closest < 0.5 * start);
}

TEST_CASE("extrapolation is deterministic") {
  GaussianMixtureField f({{0.3, vec({1, 1, 0}), 0.5}, {0.7, vec({-1, 0, 2}), 0.8}});
  const DiscretePath path = DiscretePath::linear(vec({0, 0, 0}), vec({1, 0.5, 0.2}), 8);
  ExtrapConfig cfg;
  cfg.num_steps = 9;
  const auto a = extrapolate(path, f, 0, cfg);
  const auto b = extrapolate(path, f, 0, cfg);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::memcmp(a[i].data(), b[i].data(), 3 * sizeof(double)) == 0);
}

TEST_CASE("interpolate returns the clean endpoints bit-identically") {
  const NoiseSchedule sched = NoiseSchedule::linear();
  GaussianMixtureField f({{0.5, vec({1, 0}), 0.2}, {0.5, vec({0, 1}), 0.2}}, sched);
  GeodesicConfig cfg;
  cfg.t_noise = 100;
  cfg.max_iters = 200;
  const Vec p = vec({1.0, 0.1});
  const Vec q = vec({0.1, 1.0});
  const InterpolationResult r = interpolate(p, q, f, sched, cfg);
  CHECK(r.method == "geodesic");
  CHECK(r.frames.size() == 9);
  CHECK(std::memcmp(r.frames.front().data(), p.data(), 2 * sizeof(double)) == 0);
  CHECK(std::memcmp(r.frames.back().data(), q.data(), 2 * sizeof(double)) == 0);

  const InterpolationResult same = interpolate(p, p, f, sched, cfg);
  for (const auto& fr : same.frames) CHECK(fr == p);
}

TEST_CASE("interpolate with a flat field and no noise is the straight line") {
  const NoiseSchedule sched = NoiseSchedule::linear();
  ZeroField f(3);
  GeodesicConfig cfg;
  cfg.lambda = 0.0;
  cfg.t_noise = 0;
  cfg.max_iters = 50;
  const Vec p = vec({0, 1, 2});
  const Vec q = vec({2, -1, 0});
  const InterpolationResult r = interpolate(p, q, f, sched, cfg);
  const auto line = lerp_frames(p, q, cfg.n_segments);
  for (std::size_t i = 0; i < line.size(); ++i) CHECK((r.frames[i] - line[i]).norm() <= 1e-12);
}

TEST_CASE("extrapolate_after_geodesic composes the stages") {
  const NoiseSchedule sched = NoiseSchedule::linear();
  GaussianMixtureField f({{0.5, vec({1, 0}), 0.2}, {0.5, vec({0, 1}), 0.2}}, sched);
  GeodesicConfig g;
  g.t_noise = 50;
  g.max_iters = 100;
  ExtrapConfig e;
  e.num_steps = 4;
  const auto r = extrapolate_after_geodesic(vec({1, 0}), vec({0, 1}), f, sched, g, e);
  REQUIRE(r.frames.size() == 4);
  REQUIRE(r.noisy_continuation.size() == 4);
  const auto walk = extrapolate(r.geodesic.noisy, f, g.t_noise, e);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(walk[i] == r.noisy_continuation[i]);
    CHECK(r.frames[i] == denoise_to_zero(walk[i], g.t_noise, f, sched, g.denoise_steps));
  }
  e.num_steps = 0;
  CHECK(extrapolate_after_geodesic(vec({1, 0}), vec({0, 1}), f, sched, g, e).frames.empty());
}
