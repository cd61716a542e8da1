#include "tvsid/stats.hpp"

#include <cmath>
#include <string>

namespace tvsid {

namespace {

void symmetrize(Mat& R) { R = 0.5 * (R + R.transpose()).eval(); }

void check_block(const SufficientStats& s, const RegressorBlock& b) {
  if (b.width() != s.dim()) {
    throw InvalidArgument("block width " + std::to_string(b.width()) + " does not match statistics dimension " +
                          std::to_string(s.dim()));
  }
  if (b.outputs.size() != b.rows.rows()) {
    throw InvalidArgument("block has " + std::to_string(b.rows.rows()) + " rows but " +
                          std::to_string(b.outputs.size()) + " outputs");
  }
}

void check_gamma(double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw DomainError("forgetting factor must lie in (0, 1], got " + std::to_string(gamma));
  }
}

// diag(gamma^(T-1), ..., gamma^0)
Vec block_weights(int T, double gamma) {
  Vec w(T);
  double g = 1.0;
  for (int r = T - 1; r >= 0; --r) {
    w(r) = g;
    g *= gamma;
  }
  return w;
}

}  // namespace

RegressorBlock build_block(std::span<const double> u, std::span<const double> y, long start, int n, long count) {
  if (n <= 0) throw InvalidArgument("lag count must be positive");
  if (u.empty() || y.empty()) throw InvalidArgument("input and output sequences must be nonempty");
  if (start < 1) throw InvalidArgument("block start time is 1-based");
  if (count < 0) count = static_cast<long>(y.size()) - start + 1;
  const long last = start + count - 1;
  if (count <= 0 || last > static_cast<long>(y.size()) || last > static_cast<long>(u.size())) {
    throw InvalidArgument("block [" + std::to_string(start) + ", " + std::to_string(last) +
                          "] is not covered by the data");
  }

  RegressorBlock b;
  b.start_index = start;
  b.rows = Mat::Zero(count, n);
  b.outputs.resize(count);
  for (long r = 0; r < count; ++r) {
    const long t = start + r;
    b.outputs(r) = y[t - 1];
    for (int j = 0; j < n; ++j) {
      const long s = t - j;
      if (s >= 1) b.rows(r, j) = u[s - 1];
    }
  }
  return b;
}

SufficientStats SufficientStats::empty(int n, GammaMode mode, double gamma_bar) {
  if (n <= 0) throw InvalidArgument("statistics dimension must be positive");
  if (mode == GammaMode::fixed) check_gamma(gamma_bar);
  SufficientStats s;
  s.R = Mat::Zero(n, n);
  s.Yt = Vec::Zero(n);
  s.mode = mode;
  s.gamma_bar = mode == GammaMode::fixed ? gamma_bar : 1.0;
  return s;
}

SufficientStats update_unweighted(SufficientStats s, const RegressorBlock& b) {
  if (s.mode != GammaMode::unweighted) throw InvalidArgument("update_unweighted on weighted statistics");
  check_block(s, b);
  s.R.noalias() += b.rows.transpose() * b.rows;
  s.Yt.noalias() += b.rows.transpose() * b.outputs;
  s.Yb += b.outputs.squaredNorm();
  s.count += b.size();
  symmetrize(s.R);
  return s;
}

SufficientStats update_weighted(SufficientStats s, const RegressorBlock& b, double gamma) {
  check_gamma(gamma);
  check_block(s, b);
  if (s.mode == GammaMode::fixed && gamma != s.gamma_bar) {
    throw InvalidArgument("fixed-forgetting statistics updated with a different gamma");
  }
  if (s.mode == GammaMode::unweighted && gamma != 1.0) {
    throw InvalidArgument("unweighted statistics only accept gamma = 1");
  }
  const int T = b.size();
  const double decay = std::pow(gamma, T);
  const Vec w = block_weights(T, gamma);
  const Mat WB = w.asDiagonal() * b.rows;

  s.R *= decay;
  s.R.noalias() += b.rows.transpose() * WB;
  s.Yt *= decay;
  s.Yt.noalias() += WB.transpose() * b.outputs;
  s.Yb = decay * s.Yb + b.outputs.dot(w.cwiseProduct(b.outputs));
  s.count += T;
  symmetrize(s.R);
  return s;
}

StatsDerivative weighted_stats_derivative(const SufficientStats& s_prev, const RegressorBlock& b, double gamma) {
  check_gamma(gamma);
  check_block(s_prev, b);
  const int T = b.size();
  // d/dgamma gamma^T, and diag((T-1) gamma^(T-2), ..., 1, 0) for the block weights.
  const double ddecay = T * std::pow(gamma, T - 1);
  Vec dw(T);
  for (int r = 0; r < T; ++r) {
    const int e = T - 1 - r;
    dw(r) = e == 0 ? 0.0 : e * std::pow(gamma, e - 1);
  }
  const Mat WB = dw.asDiagonal() * b.rows;

  StatsDerivative d;
  d.dR = ddecay * s_prev.R;
  d.dR.noalias() += b.rows.transpose() * WB;
  d.dR = 0.5 * (d.dR + d.dR.transpose()).eval();
  d.dYt = ddecay * s_prev.Yt;
  d.dYt.noalias() += WB.transpose() * b.outputs;
  d.dYb = ddecay * s_prev.Yb + b.outputs.dot(dw.cwiseProduct(b.outputs));
  return d;
}

}  // namespace tvsid
