#include "tvsid/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tvsid {

Vec HyperParams::to_vector() const {
  Vec v(dim());
  v(0) = lambda;
  v(1) = beta;
  if (gamma) v(2) = *gamma;
  return v;
}

HyperParams HyperParams::from_vector(const Vec& v) {
  if (v.size() != 2 && v.size() != 3) throw InvalidArgument("hyper-parameter vector must have 2 or 3 entries");
  HyperParams p;
  p.lambda = v(0);
  p.beta = v(1);
  if (v.size() == 3) p.gamma = v(2);
  return p;
}

Vec Box::lower(int dim) const {
  Vec v(dim);
  v(0) = lambda.lo;
  v(1) = beta.lo;
  if (dim == 3) v(2) = gamma.lo;
  return v;
}

Vec Box::upper(int dim) const {
  Vec v(dim);
  v(0) = lambda.hi;
  v(1) = beta.hi;
  if (dim == 3) v(2) = gamma.hi;
  return v;
}

bool Box::contains(const Vec& v) const {
  const Vec lo = lower(static_cast<int>(v.size()));
  const Vec hi = upper(static_cast<int>(v.size()));
  return (v.array() >= lo.array()).all() && (v.array() <= hi.array()).all();
}

Vec project_box(const Vec& v, const Box& omega) {
  const int d = static_cast<int>(v.size());
  return v.cwiseMax(omega.lower(d)).cwiseMin(omega.upper(d));
}

HyperParams project_box(const HyperParams& p, const Box& omega) {
  return HyperParams::from_vector(project_box(p.to_vector(), omega));
}

Mat max_profile_matrix(const Vec& profile) {
  const int n = static_cast<int>(profile.size());
  Mat M(n, n);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) M(k, j) = profile(std::max(k, j));
  }
  return M;
}

KernelFactor tc_kernel(const HyperParams& eta, int n) {
  const double lambda = eta.lambda;
  const double beta = eta.beta;
  if (n < 1) throw InvalidArgument("kernel size must be at least 1");
  if (!std::isfinite(lambda) || !std::isfinite(beta)) throw InvalidArgument("non-finite kernel hyper-parameters");
  if (lambda < 0.0) throw InvalidArgument("TC kernel needs lambda >= 0, got " + std::to_string(lambda));
  if (!(beta > 0.0 && beta <= 1.0)) throw InvalidArgument("TC kernel needs beta in (0, 1), got " + std::to_string(beta));

  KernelFactor kf;
  kf.K_profile.resize(n);
  kf.dlambda_profile.resize(n);
  kf.dbeta_profile.resize(n);
  double bpow = 1.0;  // beta^(m-1)
  for (int m = 1; m <= n; ++m) {
    kf.dbeta_profile(m - 1) = lambda * m * bpow;
    bpow *= beta;
    kf.dlambda_profile(m - 1) = bpow;
    kf.K_profile(m - 1) = lambda * bpow;
  }
  kf.K = max_profile_matrix(kf.K_profile);
  kf.dK_dlambda = max_profile_matrix(kf.dlambda_profile);
  kf.dK_dbeta = max_profile_matrix(kf.dbeta_profile);

  // The TC kernel is the covariance of a Wiener process sampled at the
  // decreasing times beta^k, so its Cholesky factor is known in closed form:
  //   L[k,1] = sqrt(lambda) beta^(k - 1/2),
  //   L[k,j] = sqrt(lambda (1 - beta)) beta^(k - j/2),  2 <= j <= k.
  // Unlike a numerical factorization this stays exact when K is numerically
  // singular (small beta, n = 100).
  kf.L = Mat::Zero(n, n);
  const double log_beta = std::log(beta);
  const double first = std::sqrt(lambda);
  const double rest = std::sqrt(lambda * (1.0 - beta));
  for (int j = 1; j <= n; ++j) {
    const double c = j == 1 ? first : rest;
    for (int k = j; k <= n; ++k) kf.L(k - 1, j - 1) = c * std::exp((k - 0.5 * j) * log_beta);
  }
  return kf;
}

Mat robust_cholesky(const Mat& A) {
  const int n = static_cast<int>(A.rows());
  Eigen::LLT<Mat> llt(A);
  if (llt.info() == Eigen::Success && (llt.matrixL().toDenseMatrix().diagonal().array() > 0.0).all()) {
    return llt.matrixL();
  }
  double jitter = 1e-12 * std::max(A.trace() / n, 1e-300);
  for (int attempt = 0; attempt < 3; ++attempt) {
    Mat B = A;
    B.diagonal().array() += jitter;
    llt.compute(B);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    jitter *= 10.0;
  }
  throw NumericalFailure("Cholesky factorization failed after diagonal jitter");
}

}  // namespace tvsid
