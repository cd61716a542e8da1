#pragma once

#include "tvsid/common.hpp"

#include <random>
#include <vector>

namespace testing {

inline std::vector<double> gaussian(std::mt19937_64& rng, long n, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  std::vector<double> v(static_cast<std::size_t>(n));
  for (double& x : v) x = nd(rng);
  return v;
}

inline tvsid::Vec to_vec(const std::vector<double>& v) {
  return Eigen::Map<const tvsid::Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

inline double rel_err(const tvsid::Mat& a, const tvsid::Mat& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

// y(t) = sum_j h_j u(t - j + 1), u(s) = 0 for s < 1.
inline std::vector<double> fir_output(const std::vector<double>& u, const tvsid::Vec& h) {
  std::vector<double> y(u.size(), 0.0);
  for (std::size_t t = 0; t < u.size(); ++t) {
    for (Eigen::Index j = 0; j < h.size() && j <= static_cast<Eigen::Index>(t); ++j) y[t] += h(j) * u[t - j];
  }
  return y;
}

}  // namespace testing
