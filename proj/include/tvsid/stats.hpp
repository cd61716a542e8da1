#pragma once

#include "tvsid/common.hpp"

#include <span>

namespace tvsid {

/// T consecutive FIR regressor rows plus the matching outputs.
/// Row r is [u(t), u(t-1), ..., u(t-n+1)] with t = start_index + r and
/// u(s) = 0 for s <= 0. Times are 1-based.
struct RegressorBlock {
  Mat rows;
  Vec outputs;
  long start_index = 1;

  [[nodiscard]] int size() const { return static_cast<int>(rows.rows()); }
  [[nodiscard]] int width() const { return static_cast<int>(rows.cols()); }
};

/// Builds the block for times start .. start+count-1. `u` and `y` hold the
/// sequences from time 1 (u[0] is u(1)). count < 0 means "through the end of y".
RegressorBlock build_block(std::span<const double> u, std::span<const double> y, long start, int n,
                           long count = -1);

enum class GammaMode { unweighted, fixed, adaptive };

/// Exponentially weighted data matrices R = Phi' G Phi, Yt = Phi' G Y, Yb = Y' G Y.
struct SufficientStats {
  Mat R;
  Vec Yt;
  double Yb = 0.0;
  long count = 0;
  GammaMode mode = GammaMode::unweighted;
  double gamma_bar = 1.0;  // only meaningful for GammaMode::fixed

  static SufficientStats empty(int n, GammaMode mode = GammaMode::unweighted, double gamma_bar = 1.0);

  [[nodiscard]] int dim() const { return static_cast<int>(R.rows()); }
};

/// Partial derivatives of an update_weighted result with respect to gamma.
struct StatsDerivative {
  Mat dR;
  Vec dYt;
  double dYb = 0.0;
};

SufficientStats update_unweighted(SufficientStats s, const RegressorBlock& b);

/// R <- gamma^T R + B' G_T B with G_T = diag(gamma^(T-1), ..., gamma^0), so the
/// newest row carries unit weight. Same pattern for Yt and Yb.
SufficientStats update_weighted(SufficientStats s, const RegressorBlock& b, double gamma);

/// d/dgamma of update_weighted(s_prev, b, gamma), holding s_prev fixed.
StatsDerivative weighted_stats_derivative(const SufficientStats& s_prev, const RegressorBlock& b,
                                          double gamma);

}  // namespace tvsid
