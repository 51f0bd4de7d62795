#pragma once

#include <string>
#include <vector>

namespace scoregeo {

/// Cumulative noise schedule alpha_bar_t for t = 0..T, alpha_bar_0 = 1.
///
/// alpha_bar is strictly decreasing and positive; sigma_t = sqrt(1 - alpha_bar_t)
/// is derived on demand rather than stored.
class NoiseSchedule {
 public:
  /// Takes an explicit table; validates the invariants.
  explicit NoiseSchedule(std::vector<double> alpha_bar);

  /// alpha_bar_t = 1 - (1 - alpha_bar_final) * t / T.
  static NoiseSchedule linear(int T = 1000, double alpha_bar_final = 0.02);

  /// Cosine schedule with offset s, betas clipped at max_beta.
  static NoiseSchedule cosine(int T = 1000, double s = 0.008, double max_beta = 0.999);

  int T() const { return static_cast<int>(alpha_bar_.size()) - 1; }
  double alpha_bar(int t) const;
  double sigma(int t) const;
  const std::vector<double>& table() const { return alpha_bar_; }

  /// First timestep whose alpha_bar is <= target (clamped to [0, T]).
  int timestep_for_alpha_bar(double target) const;

  void check_timestep(int t, const char* what) const;

 private:
  std::vector<double> alpha_bar_;
};

}  // namespace scoregeo
