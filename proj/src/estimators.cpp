#include "tvsid/estimators.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <utility>

namespace tvsid {

namespace {

double safe_value(const std::function<double()>& f) {
  try {
    return f();
  } catch (const NumericalFailure&) {
    return std::numeric_limits<double>::infinity();
  }
}

struct WeightedHistory {
  SufficientStats stats;
  StatsDerivative deriv;
};

// Phi' Gamma_k Phi and friends with Gamma_k = diag(gamma^(k-1), ..., gamma^0)
// over the whole retained history, plus their gamma-derivatives.
WeightedHistory rebuild_from_history(const RawHistory& history, int n, double gamma) {
  const long k = static_cast<long>(history.outputs.size());
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> phi(
      history.rows.data(), k, n);
  const Eigen::Map<const Vec> y(history.outputs.data(), k);

  Vec w(k);
  Vec dw(k);
  for (long t = 0; t < k; ++t) {
    const long e = k - 1 - t;
    w(t) = std::pow(gamma, static_cast<double>(e));
    dw(t) = e == 0 ? 0.0 : static_cast<double>(e) * std::pow(gamma, static_cast<double>(e - 1));
  }

  WeightedHistory out;
  out.stats = SufficientStats::empty(n, GammaMode::adaptive);
  const Mat WPhi = w.asDiagonal() * phi;
  out.stats.R.noalias() = phi.transpose() * WPhi;
  out.stats.R = 0.5 * (out.stats.R + out.stats.R.transpose()).eval();
  out.stats.Yt.noalias() = WPhi.transpose() * y;
  out.stats.Yb = y.dot(w.cwiseProduct(y));
  out.stats.count = k;

  const Mat dWPhi = dw.asDiagonal() * phi;
  out.deriv.dR.noalias() = phi.transpose() * dWPhi;
  out.deriv.dR = 0.5 * (out.deriv.dR + out.deriv.dR.transpose()).eval();
  out.deriv.dYt.noalias() = dWPhi.transpose() * y;
  out.deriv.dYb = y.dot(dw.cwiseProduct(y));
  return out;
}

WeightMoments moments_from_history(const RawHistory& history, int n, double gamma) {
  const long k = static_cast<long>(history.outputs.size());
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> phi(
      history.rows.data(), k, n);
  Vec w2(k);
  WeightMoments m;
  for (long t = 0; t < k; ++t) {
    const double w = std::pow(gamma, static_cast<double>(k - 1 - t));
    m.weight_sum += w;
    w2(t) = w * w;
  }
  m.R2.noalias() = phi.transpose() * w2.asDiagonal() * phi;
  m.R2 = 0.5 * (m.R2 + m.R2.transpose()).eval();
  return m;
}

void append_history(RawHistory& history, const RegressorBlock& block) {
  for (int r = 0; r < block.size(); ++r) {
    for (int j = 0; j < block.width(); ++j) history.rows.push_back(block.rows(r, j));
    history.outputs.push_back(block.outputs(r));
  }
}

double adaptive_sigma2(const EstimatorConfig& cfg, const SufficientStats& stats, const WeightMoments& m,
                       long k_total) {
  if (cfg.effective_dof) return ls_sigma2_effective(stats, m.R2, m.weight_sum).sigma2;
  return ls_sigma2(stats, k_total).sigma2;
}

HyperParams with_gamma(const Vec& v) { return HyperParams::from_vector(v); }

// Coarse grid start for the initial fit; the likelihood can have poor local
// minima at extreme beta.
Vec grid_start(const Objective& objective, const Box& omega) {
  constexpr std::array<double, 8> betas = {0.5, 0.6, 0.7, 0.8, 0.85, 0.9, 0.95, 0.98};
  constexpr std::array<double, 6> lambdas = {1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0};
  Vec best = project_box(Vec{{1.0, 0.9}}, omega);
  double best_f = std::numeric_limits<double>::infinity();
  for (double b : betas) {
    for (double l : lambdas) {
      const Vec v = project_box(Vec{{l, b}}, omega);
      const double f = objective.value(v);
      if (f < best_f) {
        best_f = f;
        best = v;
      }
    }
  }
  return best;
}

Vec append(const Vec& v, double x) {
  Vec out(v.size() + 1);
  out << v, x;
  return out;
}

}  // namespace

std::string to_string(EstimatorMode mode) {
  switch (mode) {
    case EstimatorMode::fixed_ff: return "fixed_ff";
    case EstimatorMode::adaptive_ff: return "adaptive_ff";
    case EstimatorMode::opt_fixed_ff: return "opt_fixed_ff";
    case EstimatorMode::opt_adaptive_ff: return "opt_adaptive_ff";
  }
  return "unknown";
}

WeightMoments WeightMoments::empty(int n) {
  WeightMoments m;
  m.R2 = Mat::Zero(n, n);
  return m;
}

WeightMoments WeightMoments::absorb(const RegressorBlock& block, double gamma) const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw DomainError("forgetting factor must lie in (0, 1]");
  if (block.width() != R2.rows()) throw InvalidArgument("block width does not match");
  const int T = block.size();
  WeightMoments out;
  const double decay = std::pow(gamma, T);
  out.weight_sum = decay * weight_sum;
  Vec w2(T);
  for (int r = 0; r < T; ++r) {
    const double w = std::pow(gamma, T - 1 - r);
    out.weight_sum += w;
    w2(r) = w * w;
  }
  out.R2 = decay * decay * R2;
  out.R2.noalias() += block.rows.transpose() * w2.asDiagonal() * block.rows;
  out.R2 = 0.5 * (out.R2 + out.R2.transpose()).eval();
  return out;
}

double weight_log_count(long prev_count, long block_rows) {
  // old samples gain gamma^T each; new rows carry gamma^(T-1) ... gamma^0
  return static_cast<double>(block_rows) * static_cast<double>(prev_count) +
         0.5 * static_cast<double>(block_rows) * static_cast<double>(block_rows - 1);
}

Vec posterior_mean(const SufficientStats& stats, const KernelFactor& kf, double sigma2) {
  if (!(sigma2 > 0.0)) throw DomainError("noise variance must be positive");
  if (kf.dim() != stats.dim()) throw InvalidArgument("kernel and statistics dimensions differ");
  const auto L = kf.L.triangularView<Eigen::Lower>();
  Mat A = kf.L.transpose() * (stats.R * L);
  A = 0.5 * (A + A.transpose()).eval();
  A.diagonal().array() += sigma2;
  const Mat S = robust_cholesky(A);
  const auto Sv = S.triangularView<Eigen::Lower>();
  Vec v = Sv.solve(kf.L.transpose() * stats.Yt);
  Sv.transpose().solveInPlace(v);
  return L * v;
}

Objective fixed_objective(const SufficientStats& stats, double sigma2, long k_total) {
  auto s = std::make_shared<const SufficientStats>(stats);
  Objective obj;
  obj.value_and_grad = [s, sigma2, k_total](const Vec& v) {
    const KernelFactor kf = tc_kernel(HyperParams::from_vector(v), s->dim());
    MlEvaluation ev = eval_grad_eta(*s, kf, sigma2, k_total);
    return ObjectiveEval{ev.value, std::move(ev.grad), std::move(ev.split_v)};
  };
  obj.value = [s, sigma2, k_total](const Vec& v) {
    return safe_value([&] {
      const KernelFactor kf = tc_kernel(HyperParams::from_vector(v), s->dim());
      return eval_f(*s, kf, sigma2, k_total).value;
    });
  };
  return obj;
}

Objective adaptive_objective(const SufficientStats& stats_prev, const RegressorBlock& block, double sigma2,
                             long k_total, bool weight_logdet) {
  auto prev = std::make_shared<const SufficientStats>(stats_prev);
  auto blk = std::make_shared<const RegressorBlock>(block);
  const double c = weight_logdet ? weight_log_count(stats_prev.count, block.size()) : 0.0;
  Objective obj;
  obj.value_and_grad = [prev, blk, sigma2, k_total, c](const Vec& v) {
    const double gamma = v(2);
    const SufficientStats cand = update_weighted(*prev, *blk, gamma);
    const StatsDerivative d = weighted_stats_derivative(*prev, *blk, gamma);
    const KernelFactor kf = tc_kernel(with_gamma(v), prev->dim());
    MlEvaluation ev = eval_grad_eta_gamma(cand, d, kf, sigma2, k_total);
    ev.value -= c * std::log(gamma);
    ev.grad(2) -= c / gamma;
    return ObjectiveEval{ev.value, std::move(ev.grad), std::move(ev.split_v)};
  };
  obj.value = [prev, blk, sigma2, k_total, c](const Vec& v) {
    return safe_value([&] {
      const double gamma = v(2);
      const SufficientStats cand = update_weighted(*prev, *blk, gamma);
      const KernelFactor kf = tc_kernel(with_gamma(v), prev->dim());
      return eval_f(cand, kf, sigma2, k_total).value - c * std::log(gamma);
    });
  };
  return obj;
}

Objective full_history_objective(const RawHistory& history, int n, double sigma2, bool weight_logdet) {
  auto hist = std::make_shared<const RawHistory>(history);
  const double k = static_cast<double>(history.outputs.size());
  const double c = weight_logdet ? 0.5 * k * (k - 1.0) : 0.0;
  Objective obj;
  obj.value_and_grad = [hist, n, sigma2, c](const Vec& v) {
    const double gamma = v(2);
    const WeightedHistory wh = rebuild_from_history(*hist, n, gamma);
    const KernelFactor kf = tc_kernel(with_gamma(v), n);
    MlEvaluation ev = eval_grad_eta_gamma(wh.stats, wh.deriv, kf, sigma2, wh.stats.count);
    ev.value -= c * std::log(gamma);
    ev.grad(2) -= c / gamma;
    return ObjectiveEval{ev.value, std::move(ev.grad), std::move(ev.split_v)};
  };
  obj.value = [hist, n, sigma2, c](const Vec& v) {
    return safe_value([&] {
      const double gamma = v(2);
      const WeightedHistory wh = rebuild_from_history(*hist, n, gamma);
      const KernelFactor kf = tc_kernel(with_gamma(v), n);
      return eval_f(wh.stats, kf, sigma2, wh.stats.count).value - c * std::log(gamma);
    });
  };
  return obj;
}

EstimatorState initialize(std::span<const double> u, std::span<const double> y, const EstimatorConfig& config) {
  const int n = config.n;
  const long k = static_cast<long>(y.size());
  if (n <= 0) throw InvalidArgument("impulse response length must be positive");
  if (k < n + 10) {
    throw InsufficientData("initial batch of " + std::to_string(k) + " samples is too short for n = " +
                           std::to_string(n));
  }
  if (!(config.gamma_fixed > 0.0 && config.gamma_fixed <= 1.0) ||
      !(config.gamma_init > 0.0 && config.gamma_init <= 1.0)) {
    throw DomainError("forgetting factors must lie in (0, 1]");
  }

  EstimatorState st;
  st.config = config;
  const RegressorBlock batch = build_block(u, y, 1, n);
  const bool adaptive = st.adaptive();

  SufficientStats prev = adaptive ? SufficientStats::empty(n, GammaMode::adaptive)
                                  : SufficientStats::empty(n, GammaMode::fixed, config.gamma_fixed);
  const double gamma0 = adaptive ? config.gamma_init : config.gamma_fixed;
  st.stats = update_weighted(prev, batch, gamma0);
  ++st.counters.stats_updates;
  if (adaptive) {
    st.moments = WeightMoments::empty(n).absorb(batch, gamma0);
    st.sigma2 = adaptive_sigma2(config, st.stats, st.moments, k);
  } else {
    st.sigma2 = ls_sigma2(st.stats, k).sigma2;
  }
  ++st.counters.ls_solves;

  // Hyper-parameters are fitted at the initial forgetting factor; gamma itself
  // starts from gamma_init.
  const Objective obj2 = fixed_objective(st.stats, st.sigma2, k);
  SgpOptions opt2 = config.sgp;
  const ConvergenceResult conv = run_to_convergence(SgpState::start_at(grid_start(obj2, config.box)), obj2,
                                                    config.box, opt2, config.opt_rel_tol, config.opt_max_iter);
  st.counters.sgp_steps += conv.iterations;
  st.sgp = conv.state;
  st.hyper = HyperParams::from_vector(conv.eta);

  if (adaptive) {
    st.hyper.gamma = gamma0;
    const bool full = config.mode == EstimatorMode::opt_adaptive_ff;
    if (full) append_history(st.history, batch);
    const Objective obj3 = full
                               ? full_history_objective(st.history, n, st.sigma2, config.weight_logdet)
                               : adaptive_objective(prev, batch, st.sigma2, k, config.weight_logdet);
    SgpState s3;
    s3.eta_prev = append(conv.state.eta_prev, gamma0);
    s3.eta_curr = append(conv.state.eta_curr, gamma0);
    s3.grad_prev = obj3.value_and_grad(s3.eta_prev).grad;
    s3.has_history = conv.state.has_history;
    s3.bb_toggle = conv.state.bb_toggle;
    st.sgp = std::move(s3);
  }

  st.h_hat = posterior_mean(st.stats, tc_kernel(st.hyper, n), st.sigma2);
  ++st.counters.posterior_solves;
  st.clock = k;
  return st;
}

EstimatorState update(EstimatorState state, const RegressorBlock& block) {
  const EstimatorConfig& cfg = state.config;
  const int n = cfg.n;
  if (block.width() != n) throw InvalidArgument("block width does not match the estimator");
  if (block.size() < 1) throw InvalidArgument("empty data block");
  if (block.start_index != state.clock + 1) {
    throw InvalidArgument("block starts at " + std::to_string(block.start_index) + ", expected " +
                          std::to_string(state.clock + 1));
  }
  const long k_new = state.clock + block.size();

  EstimatorState next = state;
  next.last_steps.clear();
  next.fault = false;
  try {
    switch (cfg.mode) {
      case EstimatorMode::fixed_ff:
      case EstimatorMode::opt_fixed_ff: {
        next.stats = update_weighted(std::move(next.stats), block, cfg.gamma_fixed);
        ++next.counters.stats_updates;
        next.sigma2 = ls_sigma2(next.stats, k_new).sigma2;
        ++next.counters.ls_solves;
        const Objective obj = fixed_objective(next.stats, next.sigma2, k_new);
        if (cfg.mode == EstimatorMode::fixed_ff) {
          StepResult step = one_step(next.sgp, obj, cfg.box, cfg.sgp);
          next.sgp = std::move(step.state);
          next.last_steps.push_back(step.report);
          ++next.counters.sgp_steps;
        } else {
          ConvergenceResult conv =
              run_to_convergence(next.sgp, obj, cfg.box, cfg.sgp, cfg.opt_rel_tol, cfg.opt_max_iter);
          next.sgp = std::move(conv.state);
          next.last_steps = std::move(conv.steps);
          next.counters.sgp_steps += conv.iterations;
        }
        next.hyper = HyperParams::from_vector(next.sgp.eta_curr);
        break;
      }
      case EstimatorMode::adaptive_ff: {
        // Noise variance from the statistics before this block.
        next.sigma2 = adaptive_sigma2(cfg, state.stats, state.moments, k_new);
        ++next.counters.ls_solves;
        const Objective obj = adaptive_objective(state.stats, block, next.sigma2, k_new, cfg.weight_logdet);
        SgpOptions opt = cfg.sgp;
        opt.use_scaling = false;
        StepResult step = one_step(next.sgp, obj, cfg.box, opt);
        next.sgp = std::move(step.state);
        next.last_steps.push_back(step.report);
        ++next.counters.sgp_steps;
        next.hyper = HyperParams::from_vector(next.sgp.eta_curr);
        next.stats = update_weighted(state.stats, block, *next.hyper.gamma);
        next.moments = state.moments.absorb(block, *next.hyper.gamma);
        ++next.counters.stats_updates;
        break;
      }
      case EstimatorMode::opt_adaptive_ff: {
        next.sigma2 = adaptive_sigma2(cfg, state.stats, state.moments, k_new);
        ++next.counters.ls_solves;
        append_history(next.history, block);
        const Objective obj = full_history_objective(next.history, n, next.sigma2, cfg.weight_logdet);
        SgpOptions opt = cfg.sgp;
        opt.use_scaling = false;
        ConvergenceResult conv = run_to_convergence(next.sgp, obj, cfg.box, opt, cfg.opt_rel_tol, cfg.opt_max_iter);
        next.sgp = std::move(conv.state);
        next.last_steps = std::move(conv.steps);
        next.counters.sgp_steps += conv.iterations;
        next.hyper = HyperParams::from_vector(next.sgp.eta_curr);
        next.stats = rebuild_from_history(next.history, n, *next.hyper.gamma).stats;
        next.moments = moments_from_history(next.history, n, *next.hyper.gamma);
        ++next.counters.stats_updates;
        break;
      }
    }
    next.h_hat = posterior_mean(next.stats, tc_kernel(next.hyper, n), next.sigma2);
    ++next.counters.posterior_solves;
    next.clock = k_new;
    return next;
  } catch (const NumericalFailure& e) {
    // Keep the previous estimate; still absorb the data so the clock stays
    // aligned with the stream.
    const double gamma = state.adaptive() ? state.hyper.gamma.value_or(cfg.gamma_init) : cfg.gamma_fixed;
    if (cfg.mode == EstimatorMode::opt_adaptive_ff) {
      append_history(state.history, block);
      state.stats = rebuild_from_history(state.history, n, gamma).stats;
      state.moments = moments_from_history(state.history, n, gamma);
    } else {
      state.stats = update_weighted(std::move(state.stats), block, gamma);
      if (state.adaptive()) state.moments = state.moments.absorb(block, gamma);
    }
    state.clock = k_new;
    state.fault = true;
    ++state.fault_count;
    state.last_fault = e.what();
    state.last_steps.clear();
    return state;
  }
}

RlsState rls_start(int m, double gamma_bar, double p0) {
  if (m <= 0) throw InvalidArgument("FIR order must be positive");
  if (!(gamma_bar > 0.0 && gamma_bar <= 1.0)) throw DomainError("forgetting factor must lie in (0, 1]");
  RlsState s;
  s.m = m;
  s.gamma_bar = gamma_bar;
  s.theta = Vec::Zero(m);
  s.P = p0 * Mat::Identity(m, m);
  return s;
}

RlsState rls_initialize(const RegressorBlock& batch, double gamma_bar) {
  const int m = batch.width();
  RlsState s = rls_start(m, gamma_bar, 1.0);
  const int T = batch.size();
  Vec w(T);
  double g = 1.0;
  for (int r = T - 1; r >= 0; --r) {
    w(r) = g;
    g *= gamma_bar;
  }
  const Mat WB = w.asDiagonal() * batch.rows;
  Mat R = batch.rows.transpose() * WB;
  R = 0.5 * (R + R.transpose()).eval();
  Eigen::LLT<Mat> llt(R);
  if (llt.info() != Eigen::Success) throw InsufficientData("RLS initial batch is not of full column rank");
  s.P = llt.solve(Mat::Identity(m, m));
  s.P = 0.5 * (s.P + s.P.transpose()).eval();
  s.theta = llt.solve(WB.transpose() * batch.outputs);
  s.count = T;
  return s;
}

RlsState rls_update(RlsState state, const Vec& phi, double y) {
  if (phi.size() != state.m) throw InvalidArgument("regressor length does not match the RLS order");
  const Vec Pphi = state.P * phi;
  const double denom = state.gamma_bar + phi.dot(Pphi);
  const Vec gain = Pphi / denom;
  state.theta += gain * (y - phi.dot(state.theta));
  state.P.noalias() -= gain * Pphi.transpose();
  state.P /= state.gamma_bar;
  state.P = 0.5 * (state.P + state.P.transpose()).eval();
  ++state.count;
  return state;
}

RlsState rls_update(RlsState state, const RegressorBlock& block) {
  for (int r = 0; r < block.size(); ++r) {
    state = rls_update(std::move(state), block.rows.row(r).transpose(), block.outputs(r));
  }
  return state;
}

}  // namespace tvsid
