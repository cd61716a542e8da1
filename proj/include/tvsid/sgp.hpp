#pragma once

#include "tvsid/common.hpp"
#include "tvsid/kernel.hpp"

#include <functional>
#include <vector>

namespace tvsid {

struct SgpOptions {
  double armijo_c = 1e-4;
  double backtrack_delta = 0.4;
  double nu_min = 1e-10;
  double alpha_min = 1e-8;
  double alpha_max = 1e8;
  double d_min = 1e-6;
  double d_max = 1e6;
  bool use_scaling = true;
};

struct ObjectiveEval {
  double value = 0.0;
  Vec grad;
  Vec split_v;  // may be empty or shorter than grad; missing entries get D_jj = 1
};

/// A smooth objective over a box. `value` is used by the line search only.
struct Objective {
  std::function<ObjectiveEval(const Vec&)> value_and_grad;
  std::function<double(const Vec&)> value;
};

/// Optimizer memory carried between data arrivals.
struct SgpState {
  Vec eta_prev;
  Vec eta_curr;
  Vec grad_prev;  // gradient at eta_prev of the objective in force at that time
  bool has_history = false;
  bool bb_toggle = false;  // false: next step uses the first BB rule

  static SgpState start_at(const Vec& eta);
};

struct StepReport {
  double f_start = 0.0;
  double f_end = 0.0;
  double directional = 0.0;  // grad' * Delta
  double nu = 0.0;
  double alpha = 0.0;
  int value_evals = 0;
  int grad_evals = 0;
  bool stalled = false;
  bool armijo_ok = true;
  bool feasible = true;
};

struct StepResult {
  SgpState state;
  Vec eta;
  StepReport report;
};

/// D_jj = clamp(eta_j / V_j, d_min, d_max); a nonpositive V_j gives 1.
Vec scaling_matrix(const Vec& split_v, const Vec& eta, double d_min, double d_max);

/// Barzilai-Borwein step length for the metric D (D = I gives the classic
/// rules). `first_rule` picks r'D^-1D^-1r / r'D^-1w, otherwise r'Dw / w'DDw.
double bb_step(const Vec& r, const Vec& w, const Vec& d, bool first_rule, const SgpOptions& opt);

/// One scaled-gradient-projection iteration from state.eta_curr on `objective`.
StepResult one_step(const SgpState& state, const Objective& objective, const Box& omega,
                    const SgpOptions& opt);

struct ConvergenceResult {
  SgpState state;
  Vec eta;
  int iterations = 0;
  bool converged = false;
  std::vector<double> f_trace;
  std::vector<StepReport> steps;
};

/// Iterates one_step until |f_prev - f| / max(1, |f_prev|) < rel_tol or
/// max_iter steps.
ConvergenceResult run_to_convergence(const SgpState& state, const Objective& objective, const Box& omega,
                                     const SgpOptions& opt, double rel_tol, int max_iter = 500);

}  // namespace tvsid
