#include "tvsid/sgp.hpp"

#include <algorithm>
#include <cmath>

namespace tvsid {

SgpState SgpState::start_at(const Vec& eta) {
  SgpState s;
  s.eta_prev = eta;
  s.eta_curr = eta;
  s.grad_prev = Vec::Zero(eta.size());
  return s;
}

Vec scaling_matrix(const Vec& split_v, const Vec& eta, double d_min, double d_max) {
  Vec d = Vec::Ones(eta.size());
  for (Eigen::Index j = 0; j < std::min(split_v.size(), eta.size()); ++j) {
    if (split_v(j) > 0.0 && std::isfinite(split_v(j))) d(j) = std::clamp(eta(j) / split_v(j), d_min, d_max);
  }
  return d;
}

double bb_step(const Vec& r, const Vec& w, const Vec& d, bool first_rule, const SgpOptions& opt) {
  double num = 0.0;
  double den = 0.0;
  double curvature = 0.0;
  if (first_rule) {
    num = (r.array() / d.array()).square().sum();
    den = (r.array() * w.array() / d.array()).sum();
    curvature = den;
  } else {
    num = (r.array() * w.array() * d.array()).sum();
    den = (w.array() * d.array()).square().sum();
    curvature = num;
  }
  double alpha = 0.0;
  if (curvature > 0.0 && den > 0.0 && std::isfinite(num / den)) {
    alpha = num / den;
  } else {
    // Rules undefined without positive curvature along r.
    const double wn = w.norm();
    alpha = wn > 0.0 ? std::max(1.0, r.norm() / wn) : 1.0;
  }
  return std::clamp(alpha, opt.alpha_min, opt.alpha_max);
}

StepResult one_step(const SgpState& state, const Objective& objective, const Box& omega, const SgpOptions& opt) {
  const Vec eta = project_box(state.eta_curr, omega);
  const ObjectiveEval e = objective.value_and_grad(eta);
  if (!std::isfinite(e.value) || !e.grad.allFinite()) {
    throw NumericalFailure("objective or gradient not finite at the current iterate");
  }

  StepReport rep;
  rep.grad_evals = 1;
  rep.f_start = e.value;

  Vec d = Vec::Ones(eta.size());
  double alpha = 1.0;
  if (state.has_history) {
    if (opt.use_scaling) d = scaling_matrix(e.split_v, eta, opt.d_min, opt.d_max);
    const Vec r = eta - state.eta_prev;
    const Vec w = e.grad - state.grad_prev;
    alpha = bb_step(r, w, d, !state.bb_toggle, opt);
  }
  rep.alpha = alpha;

  const Vec z = project_box(eta - alpha * d.cwiseProduct(e.grad), omega);
  const Vec delta = z - eta;
  rep.directional = e.grad.dot(delta);

  Vec next = eta;
  double f_next = e.value;
  double nu = 1.0;
  bool accepted = delta.squaredNorm() == 0.0;
  while (!accepted) {
    // Clamp only removes rounding: eta + nu * delta can land an ulp outside
    // the box when z sits on a bound.
    const Vec trial = project_box(eta + nu * delta, omega);
    const double f_trial = objective.value(trial);
    ++rep.value_evals;
    if (std::isfinite(f_trial) && f_trial <= e.value + opt.armijo_c * nu * rep.directional) {
      next = trial;
      f_next = f_trial;
      accepted = true;
      break;
    }
    nu *= opt.backtrack_delta;
    if (nu < opt.nu_min) break;
  }

  rep.stalled = !accepted;
  rep.nu = accepted ? nu : 0.0;
  rep.f_end = f_next;
  rep.armijo_ok = rep.stalled || f_next <= e.value + opt.armijo_c * rep.nu * rep.directional;
  rep.feasible = omega.contains(next);

  StepResult out;
  out.state.eta_prev = eta;
  out.state.eta_curr = next;
  out.state.grad_prev = e.grad;
  out.state.has_history = true;
  out.state.bb_toggle = accepted ? !state.bb_toggle : state.bb_toggle;
  out.eta = next;
  out.report = rep;
  return out;
}

ConvergenceResult run_to_convergence(const SgpState& state, const Objective& objective, const Box& omega,
                                     const SgpOptions& opt, double rel_tol, int max_iter) {
  if (!(rel_tol > 0.0)) throw InvalidArgument("relative tolerance must be positive");
  ConvergenceResult res;
  res.state = state;
  res.eta = project_box(state.eta_curr, omega);
  for (int it = 0; it < max_iter; ++it) {
    StepResult step = one_step(res.state, objective, omega, opt);
    res.state = std::move(step.state);
    res.eta = std::move(step.eta);
    res.steps.push_back(step.report);
    if (res.f_trace.empty()) res.f_trace.push_back(step.report.f_start);
    res.f_trace.push_back(step.report.f_end);
    ++res.iterations;
    const double change =
        std::abs(step.report.f_start - step.report.f_end) / std::max(1.0, std::abs(step.report.f_start));
    if (step.report.stalled) {
      // No admissible decrease left: stationary up to rounding when the
      // predicted decrease is itself negligible.
      res.converged = std::abs(step.report.directional) <= rel_tol * std::max(1.0, std::abs(step.report.f_start));
      break;
    }
    if (change < rel_tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace tvsid
