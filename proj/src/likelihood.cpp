#include "tvsid/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tvsid {

namespace {

void check_inputs(const SufficientStats& stats, const KernelFactor& kf, double sigma2) {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
    throw DomainError("noise variance must be positive, got " + std::to_string(sigma2));
  }
  if (kf.dim() != stats.dim()) throw InvalidArgument("kernel and statistics dimensions differ");
}

// Everything the value, gradient and posterior mean share.
struct Factorization {
  Mat S;  // S S' = sigma2 I + L' R L
  Mat X;  // S^-1 L'
  Vec v;  // X Yt
  Vec h;  // X' v, the posterior mean
  double value = 0.0;
};

Factorization factorize(const SufficientStats& stats, const KernelFactor& kf, double sigma2, long k_total) {
  check_inputs(stats, kf, sigma2);
  const int n = stats.dim();
  const Mat RL = stats.R * kf.L.triangularView<Eigen::Lower>();
  Mat A = kf.L.transpose().triangularView<Eigen::Upper>() * RL;
  A = 0.5 * (A + A.transpose()).eval();
  A.diagonal().array() += sigma2;

  Factorization fz;
  fz.S = robust_cholesky(A);
  fz.X = fz.S.triangularView<Eigen::Lower>().solve(kf.L.transpose());
  fz.v = fz.X * stats.Yt;
  fz.h = fz.X.transpose() * fz.v;

  const double log_det_s = fz.S.diagonal().array().log().sum();
  fz.value = static_cast<double>(k_total - n) * std::log(sigma2) + 2.0 * log_det_s +
             (stats.Yb - fz.v.squaredNorm()) / sigma2;
  if (!std::isfinite(fz.value)) throw NumericalFailure("marginal likelihood is not finite");
  return fz;
}

// Splits a' F a - tr(M F) style terms for F = profile(max(k,j)):
//   F = sum_p d_p e_p e_p',  d_p = F(p) - F(p+1),  e_p = 1 on taps 1..p,
// so tr(M F) = sum_p d_p B(p) and a' F a = sum_p d_p c_p^2 with B(p) the
// leading p x p block sum of M and c_p the partial sums of a. Positive and
// negative d_p go to opposite sides, which keeps both parts nonnegative.
void split_gradient(const Vec& profile, const Vec& block_sums, const Vec& partial_sq, double& v, double& u) {
  const int n = static_cast<int>(profile.size());
  v = 0.0;
  u = 0.0;
  for (int p = 0; p < n; ++p) {
    const double d = profile(p) - (p + 1 < n ? profile(p + 1) : 0.0);
    if (d >= 0.0) {
      v += d * block_sums(p);
      u += d * partial_sq(p);
    } else {
      v -= d * partial_sq(p);
      u -= d * block_sums(p);
    }
  }
}

void fill_eta_gradient(MlEvaluation& out, const SufficientStats& stats, const KernelFactor& kf, double sigma2,
                       const Factorization& fz, int dim) {
  const int n = stats.dim();
  // Sigma^-1 mapped to tap space: a = Phi' Sigma^-1 Y, M = Phi' Sigma^-1 Phi.
  const Vec a = (stats.Yt - stats.R * fz.h) / sigma2;
  const Mat W = fz.X * stats.R;
  Mat M = stats.R;
  M.noalias() -= W.transpose() * W;
  M /= sigma2;

  Vec block_sums(n);
  Vec partial_sq(n);
  double block = 0.0;
  double partial = 0.0;
  for (int p = 0; p < n; ++p) {
    // B is PSD, so every leading block sum is >= 0 up to rounding.
    block += 2.0 * M.col(p).head(p).sum() + M(p, p);
    block_sums(p) = std::max(block, 0.0);
    partial += a(p);
    partial_sq(p) = partial * partial;
  }

  out.split_v.resize(2);
  out.split_u.resize(2);
  split_gradient(kf.dlambda_profile, block_sums, partial_sq, out.split_v(0), out.split_u(0));
  split_gradient(kf.dbeta_profile, block_sums, partial_sq, out.split_v(1), out.split_u(1));
  out.grad = Vec::Zero(dim);
  out.grad.head(2) = out.split_v - out.split_u;
}

double gamma_derivative_impl(const StatsDerivative& d, double sigma2, const Factorization& fz) {
  // tr(A^-1 L' dR L) = tr(dR X'X)
  const Mat Q = fz.X.transpose() * fz.X;
  const double trace_term = (d.dR.array() * Q.array()).sum();
  const double quad = d.dYb - 2.0 * fz.h.dot(d.dYt) + fz.h.dot(d.dR * fz.h);
  return trace_term + quad / sigma2;
}

}  // namespace

MlEvaluation eval_f(const SufficientStats& stats, const KernelFactor& kf, double sigma2, long k_total) {
  Factorization fz = factorize(stats, kf, sigma2, k_total);
  MlEvaluation out;
  out.value = fz.value;
  out.S = std::move(fz.S);
  out.h_hat = std::move(fz.h);
  return out;
}

MlEvaluation eval_grad_eta(const SufficientStats& stats, const KernelFactor& kf, double sigma2, long k_total) {
  Factorization fz = factorize(stats, kf, sigma2, k_total);
  MlEvaluation out;
  out.value = fz.value;
  fill_eta_gradient(out, stats, kf, sigma2, fz, 2);
  out.S = std::move(fz.S);
  out.h_hat = std::move(fz.h);
  return out;
}

double gamma_derivative(const SufficientStats& stats, const StatsDerivative& dstats, const KernelFactor& kf,
                        double sigma2) {
  const Factorization fz = factorize(stats, kf, sigma2, stats.count);
  return gamma_derivative_impl(dstats, sigma2, fz);
}

double eval_grad_gamma(const SufficientStats& stats_prev, const RegressorBlock& block, const HyperParams& eta,
                       double sigma2, double gamma, long k_total) {
  const SufficientStats candidate = update_weighted(stats_prev, block, gamma);
  const StatsDerivative d = weighted_stats_derivative(stats_prev, block, gamma);
  const KernelFactor kf = tc_kernel(eta, stats_prev.dim());
  const Factorization fz = factorize(candidate, kf, sigma2, k_total);
  return gamma_derivative_impl(d, sigma2, fz);
}

MlEvaluation eval_grad_eta_gamma(const SufficientStats& stats, const StatsDerivative& dstats, const KernelFactor& kf,
                                 double sigma2, long k_total) {
  Factorization fz = factorize(stats, kf, sigma2, k_total);
  MlEvaluation out;
  out.value = fz.value;
  fill_eta_gradient(out, stats, kf, sigma2, fz, 3);
  out.grad(2) = gamma_derivative_impl(dstats, sigma2, fz);
  out.S = std::move(fz.S);
  out.h_hat = std::move(fz.h);
  return out;
}

namespace {

// LLT of R, or an LDLT of a slightly ridged R when R is singular.
struct LsSolver {
  Eigen::LLT<Mat> llt;
  Eigen::LDLT<Mat> ldlt;
  bool use_llt = true;

  explicit LsSolver(const Mat& R) : llt(R) {
    use_llt = llt.info() == Eigen::Success;
    if (!use_llt) {
      Mat ridged = R;
      ridged.diagonal().array() += 1e-10 * std::max(R.trace() / static_cast<double>(R.rows()), 1e-300);
      ldlt.compute(ridged);
      if (ldlt.info() != Eigen::Success) throw NumericalFailure("least-squares solve failed even with ridge");
    }
  }

  template <typename Rhs>
  Mat solve(const Rhs& b) const {
    Mat x = use_llt ? Mat(llt.solve(b)) : Mat(ldlt.solve(b));
    if (!x.allFinite()) throw NumericalFailure("least-squares solve produced non-finite values");
    return x;
  }
};

LsEstimate finish(const SufficientStats& stats, Vec h_ls, double divisor, long k_total) {
  LsEstimate est;
  est.h_ls = std::move(h_ls);
  const double rss = stats.Yb - 2.0 * stats.Yt.dot(est.h_ls) + est.h_ls.dot(stats.R * est.h_ls);
  est.sigma2_raw = rss / divisor;
  const double floor = 1e-12 * std::max(1.0, stats.Yb / static_cast<double>(k_total));
  est.sigma2 = std::max(est.sigma2_raw, floor);
  return est;
}

}  // namespace

LsEstimate ls_sigma2(const SufficientStats& stats, long k_total) {
  const int n = stats.dim();
  if (k_total <= n) {
    throw InsufficientData("noise variance needs more than " + std::to_string(n) + " samples, got " +
                           std::to_string(k_total));
  }
  const LsSolver solver(stats.R);
  Vec h = solver.solve(stats.Yt);
  return finish(stats, std::move(h), static_cast<double>(k_total - n), k_total);
}

LsEstimate ls_sigma2_effective(const SufficientStats& stats, const Mat& R2, double weight_sum) {
  const int n = stats.dim();
  if (R2.rows() != n || R2.cols() != n) throw InvalidArgument("second-moment matrix has the wrong size");
  if (stats.count <= n) {
    throw InsufficientData("noise variance needs more than " + std::to_string(n) + " samples, got " +
                           std::to_string(stats.count));
  }
  const LsSolver solver(stats.R);
  Vec h = solver.solve(stats.Yt);
  const double dof = weight_sum - solver.solve(R2).trace();
  // Fewer than one effective residual degree of freedom: the estimate is not usable.
  if (!(dof >= 1.0)) throw NumericalFailure("weighted residual has no degrees of freedom left");
  return finish(stats, std::move(h), dof, stats.count);
}

}  // namespace tvsid
