#pragma once

#include "tvsid/kernel.hpp"
#include "tvsid/likelihood.hpp"
#include "tvsid/sgp.hpp"
#include "tvsid/stats.hpp"

#include <span>
#include <string>
#include <vector>

namespace tvsid {

enum class EstimatorMode { fixed_ff, adaptive_ff, opt_fixed_ff, opt_adaptive_ff };

std::string to_string(EstimatorMode mode);

struct EstimatorConfig {
  int n = 100;
  EstimatorMode mode = EstimatorMode::fixed_ff;
  double gamma_fixed = 0.998;
  double gamma_init = 0.995;
  Box box;
  SgpOptions sgp;
  double opt_rel_tol = 1e-9;
  int opt_max_iter = 500;
  // Adds -ln det(Gamma) to the adaptive-forgetting objective, turning it into
  // the likelihood of the heteroscedastic noise model sigma2 * Gamma^-1.
  bool weight_logdet = true;
  // Adaptive modes only: divide the weighted LS residual by its effective
  // degrees of freedom instead of k - n. With k - n the variance estimate
  // shrinks with gamma and the two feed each other down to the lower bound.
  bool effective_dof = true;
};

/// tr(Gamma) and Phi' Gamma^2 Phi for the current weighting, needed by the
/// effective-dof noise variance.
struct WeightMoments {
  double weight_sum = 0.0;
  Mat R2;

  static WeightMoments empty(int n);
  /// Same recursion as update_weighted, with squared weights for R2.
  [[nodiscard]] WeightMoments absorb(const RegressorBlock& block, double gamma) const;
};

/// Per-phase call counts of the online update.
struct UpdateCounters {
  long stats_updates = 0;
  long ls_solves = 0;
  long sgp_steps = 0;
  long posterior_solves = 0;
};

/// Raw regressor history; kept only by opt_adaptive_ff, which rebuilds the
/// weighted statistics for every candidate gamma.
struct RawHistory {
  std::vector<double> rows;  // row-major, n columns
  std::vector<double> outputs;
};

struct EstimatorState {
  EstimatorConfig config;
  SufficientStats stats;
  HyperParams hyper;
  SgpState sgp;
  Vec h_hat;
  double sigma2 = 0.0;
  long clock = 0;

  bool fault = false;
  long fault_count = 0;
  std::string last_fault;

  UpdateCounters counters;
  std::vector<StepReport> last_steps;
  RawHistory history;
  WeightMoments moments;  // adaptive modes only

  [[nodiscard]] EstimatorMode mode() const { return config.mode; }
  [[nodiscard]] bool adaptive() const {
    return config.mode == EstimatorMode::adaptive_ff || config.mode == EstimatorMode::opt_adaptive_ff;
  }
};

/// Fits the estimator on the first batch: statistics, LS noise variance, a
/// fully converged marginal-likelihood fit and the posterior mean.
/// `u` and `y` start at time 1.
EstimatorState initialize(std::span<const double> u, std::span<const double> y, const EstimatorConfig& config);

/// Absorbs one block of new data and refreshes sigma2, the hyper-parameters
/// and the impulse response. On a numerical failure the previous estimate is
/// kept and the fault flag is raised.
EstimatorState update(EstimatorState state, const RegressorBlock& block);

/// (R + sigma2 K^-1)^-1 Yt computed as L (sigma2 I + L' R L)^-1 L' Yt.
Vec posterior_mean(const SufficientStats& stats, const KernelFactor& kf, double sigma2);

/// Marginal-likelihood objective over (lambda, beta) for fixed statistics.
Objective fixed_objective(const SufficientStats& stats, double sigma2, long k_total);

/// Objective over (lambda, beta, gamma): candidate statistics are
/// update_weighted(stats_prev, block, gamma).
Objective adaptive_objective(const SufficientStats& stats_prev, const RegressorBlock& block, double sigma2,
                             long k_total, bool weight_logdet);

/// Objective over (lambda, beta, gamma) with statistics rebuilt from the whole
/// history at every candidate gamma.
Objective full_history_objective(const RawHistory& history, int n, double sigma2, bool weight_logdet);

/// Sum over samples of ln(weight) contributed by the candidate gamma when a
/// block of T rows is absorbed on top of `prev_count` older samples.
double weight_log_count(long prev_count, long block_rows);

struct RlsState {
  Vec theta;
  Mat P;
  double gamma_bar = 1.0;
  int m = 0;
  long count = 0;
};

/// Exact weighted least squares on a batch; the batch must have full column rank.
RlsState rls_initialize(const RegressorBlock& batch, double gamma_bar);

/// theta = 0, P = p0 I.
RlsState rls_start(int m, double gamma_bar, double p0);

RlsState rls_update(RlsState state, const Vec& phi, double y);
RlsState rls_update(RlsState state, const RegressorBlock& block);

}  // namespace tvsid
