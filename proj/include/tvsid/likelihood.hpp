#pragma once

#include "tvsid/kernel.hpp"
#include "tvsid/stats.hpp"

namespace tvsid {

/// Negative log marginal likelihood (up to the 2*pi constant, times two) and
/// optionally its gradient.
///
/// `grad` is over (lambda, beta) or (lambda, beta, gamma). `split_v` and
/// `split_u` cover the (lambda, beta) coordinates only and satisfy
/// grad = split_v - split_u with both parts nonnegative.
struct MlEvaluation {
  double value = 0.0;
  Vec grad;
  Vec split_v;
  Vec split_u;
  Mat S;      // lower factor, S S' = sigma2 I + L' R L
  Vec h_hat;  // posterior mean, free by-product of the factorization
};

/// f = (k - n) ln sigma2 + 2 ln|S| + (Yb - |S^-1 L' Yt|^2) / sigma2.
MlEvaluation eval_f(const SufficientStats& stats, const KernelFactor& kf, double sigma2, long k_total);

/// eval_f plus the (lambda, beta) gradient and its V - U split, all in O(n^3).
MlEvaluation eval_grad_eta(const SufficientStats& stats, const KernelFactor& kf, double sigma2,
                           long k_total);

/// df/dgamma of eval_f(update_weighted(stats_prev, block, gamma), ...).
double eval_grad_gamma(const SufficientStats& stats_prev, const RegressorBlock& block,
                       const HyperParams& eta, double sigma2, double gamma, long k_total);

/// Value and gradient over (lambda, beta, gamma) for statistics that depend on
/// gamma through `dstats`. Shares one factorization between all coordinates.
MlEvaluation eval_grad_eta_gamma(const SufficientStats& stats, const StatsDerivative& dstats,
                                 const KernelFactor& kf, double sigma2, long k_total);

/// d/dgamma of eval_f for given statistic derivatives.
double gamma_derivative(const SufficientStats& stats, const StatsDerivative& dstats,
                        const KernelFactor& kf, double sigma2);

struct LsEstimate {
  Vec h_ls;
  double sigma2 = 0.0;
  double sigma2_raw = 0.0;  // before flooring
};

/// Least-squares impulse response and residual variance
/// (Yb - 2 Yt' h + h' R h) / (k - n), floored at 1e-12 * max(1, Yb / k).
LsEstimate ls_sigma2(const SufficientStats& stats, long k_total);

/// Same residual divided by its expected value under equal-variance noise,
/// tr(Gamma) - tr(R^-1 R2) with R2 = Phi' Gamma^2 Phi. Equals k - n when
/// Gamma = I.
LsEstimate ls_sigma2_effective(const SufficientStats& stats, const Mat& R2, double weight_sum);

}  // namespace tvsid
