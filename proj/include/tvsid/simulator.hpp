#pragma once

#include "tvsid/common.hpp"

#include <complex>
#include <cstdint>
#include <vector>

namespace tvsid {

inline constexpr int kTruthTaps = 500;

/// Rational SISO system g * prod(1 - z_i q^-1) / prod(1 - p_i q^-1) and its
/// truncated impulse response (h_true[0] is the lag-0 coefficient).
struct LtiSystem {
  std::vector<std::complex<double>> poles;
  std::vector<std::complex<double>> zeros;
  double gain = 1.0;
  Vec h_true;

  [[nodiscard]] int order() const { return static_cast<int>(poles.size()); }
};

/// Real coefficients of prod(1 - r_i q^-1), lowest power first.
std::vector<double> expand_roots(const std::vector<std::complex<double>>& roots);

/// Impulse response of g * B / A through a cascade of real sections.
/// Complex roots must be closed under conjugation.
Vec impulse_response(const std::vector<std::complex<double>>& poles,
                     const std::vector<std::complex<double>>& zeros, double gain, int taps);

LtiSystem random_system(std::uint64_t seed, int order = 30, double radius = 0.95, int taps = kTruthTaps);

/// Adds one conjugate pole pair and one conjugate zero pair, renormalised.
LtiSystem perturb_system(const LtiSystem& sys, std::uint64_t seed, double radius = 0.95);

/// Unit-variance Gaussian noise low-passed by a 65-tap Hamming windowed sinc.
/// `band` is the cutoff as a fraction of the Nyquist frequency.
std::vector<double> bandlimited_input(std::uint64_t seed, long length, double band = 0.8);

struct ScenarioOptions {
  long length = 3000;
  long switch_time = 1001;
  double noise_scale = 1.0;  // 0 gives noiseless outputs
  bool perturb = true;       // false keeps the same system after the switch
};

struct ScenarioData {
  std::vector<double> u;
  std::vector<double> y;
  std::vector<double> y_clean;
  LtiSystem before;
  LtiSystem after;
  long switch_time = 1001;
  double noise_sigma2 = 0.0;
  std::uint64_t seed = 0;

  /// Truth at time k (1-based), truncated to n taps.
  [[nodiscard]] Vec truth_at(long k, int n) const;
};

ScenarioData make_scenario(std::uint64_t seed, const ScenarioOptions& opt = {});

/// Writes `<stem>.csv` (t,u,y) and `<stem>.json` (systems, seed, switch time).
void export_scenario(const ScenarioData& data, const std::string& stem);
ScenarioData import_scenario(const std::string& stem);

}  // namespace tvsid
