#pragma once

#include "tvsid/common.hpp"

#include <optional>

namespace tvsid {

/// TC-kernel hyper-parameters; gamma is set only when the forgetting factor
/// is itself being estimated.
struct HyperParams {
  double lambda = 1.0;
  double beta = 0.9;
  std::optional<double> gamma;

  [[nodiscard]] int dim() const { return gamma ? 3 : 2; }
  [[nodiscard]] Vec to_vector() const;
  static HyperParams from_vector(const Vec& v);
};

struct Interval {
  double lo;
  double hi;
};

/// Feasible box for the hyper-parameters.
struct Box {
  Interval lambda{1e-8, 1e8};
  Interval beta{1e-4, 1.0 - 1e-4};
  Interval gamma{0.9, 1.0};

  [[nodiscard]] Vec lower(int dim) const;
  [[nodiscard]] Vec upper(int dim) const;
  [[nodiscard]] bool contains(const Vec& v) const;
};

/// Componentwise clamp. For a diagonal metric this is the exact metric
/// projection onto the box.
HyperParams project_box(const HyperParams& p, const Box& omega);
Vec project_box(const Vec& v, const Box& omega);

/// TC kernel K[k,j] = lambda * beta^max(k,j) (1-based taps) together with its
/// Cholesky factor and hyper-parameter derivatives.
///
/// Every matrix here has the form F(max(k,j)); the `*_profile` vectors hold
/// F(1..n). The likelihood module uses the profiles to split gradients into
/// nonnegative parts without forming eigen-decompositions.
struct KernelFactor {
  Mat K;
  Mat L;
  Mat dK_dlambda;
  Mat dK_dbeta;
  Vec K_profile;
  Vec dlambda_profile;
  Vec dbeta_profile;

  [[nodiscard]] int dim() const { return static_cast<int>(K.rows()); }
};

KernelFactor tc_kernel(const HyperParams& eta, int n);

/// Expands a max-profile F(1..n) into the matrix F(max(k,j)).
Mat max_profile_matrix(const Vec& profile);

/// Lower Cholesky factor with trace-scaled diagonal jitter: on failure adds
/// 1e-12 * tr(A)/n, then 10x more, up to three retries.
Mat robust_cholesky(const Mat& A);

}  // namespace tvsid
