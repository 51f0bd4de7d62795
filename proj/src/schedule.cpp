#include "scoregeo/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "scoregeo/error.hpp"

namespace scoregeo {

NoiseSchedule::NoiseSchedule(std::vector<double> alpha_bar) : alpha_bar_(std::move(alpha_bar)) {
  if (alpha_bar_.size() < 2) throw ArgumentError("NoiseSchedule: need T >= 1");
  if (alpha_bar_[0] != 1.0) throw ArgumentError("NoiseSchedule: alpha_bar_0 must equal 1");
  for (std::size_t t = 1; t < alpha_bar_.size(); ++t) {
    if (!(alpha_bar_[t] < alpha_bar_[t - 1])) {
      throw ArgumentError("NoiseSchedule: alpha_bar must be strictly decreasing (t=" +
                          std::to_string(t) + ")");
    }
  }
  if (!(alpha_bar_.back() > 0.0)) throw ArgumentError("NoiseSchedule: alpha_bar_T must be > 0");
}

NoiseSchedule NoiseSchedule::linear(int T, double alpha_bar_final) {
  if (T < 1) throw ArgumentError("NoiseSchedule::linear: T must be >= 1");
  if (!(alpha_bar_final > 0.0 && alpha_bar_final < 1.0)) {
    throw ArgumentError("NoiseSchedule::linear: alpha_bar_final must be in (0, 1)");
  }
  std::vector<double> ab(static_cast<std::size_t>(T) + 1);
  for (int t = 0; t <= T; ++t) ab[t] = 1.0 - (1.0 - alpha_bar_final) * t / T;
  ab[0] = 1.0;
  return NoiseSchedule(std::move(ab));
}

NoiseSchedule NoiseSchedule::cosine(int T, double s, double max_beta) {
  if (T < 1) throw ArgumentError("NoiseSchedule::cosine: T must be >= 1");
  if (!(s >= 0.0) || !(max_beta > 0.0 && max_beta < 1.0)) {
    throw ArgumentError("NoiseSchedule::cosine: bad offset or max_beta");
  }
  auto f = [&](int t) {
    const double c = std::cos((static_cast<double>(t) / T + s) / (1.0 + s) * std::numbers::pi / 2);
    return c * c;
  };
  std::vector<double> ab(static_cast<std::size_t>(T) + 1);
  ab[0] = 1.0;
  const double f0 = f(0);
  for (int t = 1; t <= T; ++t) {
    const double beta = std::min(1.0 - (f(t) / f0) / (f(t - 1) / f0), max_beta);
    ab[t] = ab[t - 1] * (1.0 - beta);
  }
  return NoiseSchedule(std::move(ab));
}

void NoiseSchedule::check_timestep(int t, const char* what) const {
  if (t < 0 || t > T()) {
    throw ArgumentError(std::string(what) + ": timestep " + std::to_string(t) + " outside [0, " +
                        std::to_string(T()) + "]");
  }
}

double NoiseSchedule::alpha_bar(int t) const {
  check_timestep(t, "NoiseSchedule::alpha_bar");
  return alpha_bar_[static_cast<std::size_t>(t)];
}

double NoiseSchedule::sigma(int t) const { return std::sqrt(1.0 - alpha_bar(t)); }

int NoiseSchedule::timestep_for_alpha_bar(double target) const {
  for (int t = 0; t <= T(); ++t) {
    if (alpha_bar_[static_cast<std::size_t>(t)] <= target) return t;
  }
  return T();
}

}  // namespace scoregeo
