#include "tvsid/selfcheck.hpp"

#include "tvsid/estimators.hpp"
#include "tvsid/kernel.hpp"
#include "tvsid/likelihood.hpp"
#include "tvsid/reference.hpp"
#include "tvsid/stats.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <span>

namespace tvsid {

namespace {

struct Instance {
  Vec u;
  Vec y;
  int n = 0;
  double lambda = 1.0;
  double beta = 0.8;
  double sigma2 = 0.5;
  double gamma = 1.0;
};

class Generator {
 public:
  explicit Generator(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double normal() { return normal_(rng_); }

  Instance instance(int n_max, long N_max) {
    Instance in;
    in.n = integer(3, n_max);
    const long N = integer(in.n + 20, static_cast<int>(N_max));
    in.u.resize(N);
    for (long t = 0; t < N; ++t) in.u(t) = normal();
    Vec h(in.n);
    for (int j = 0; j < in.n; ++j) h(j) = std::pow(0.8, j) * normal();
    const Mat Phi = reference::toeplitz_regressors(in.u, in.n);
    in.y = Phi * h;
    for (long t = 0; t < N; ++t) in.y(t) += 0.5 * normal();
    in.lambda = std::exp(uniform(std::log(0.1), std::log(10.0)));
    in.beta = uniform(0.5, 0.95);
    in.sigma2 = uniform(0.1, 2.0);
    in.gamma = uniform(0.9, 0.999);
    return in;
  }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::span<const double> span_of(const Vec& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

double rel(const Mat& a, const Mat& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

// Absorbs the data in random-sized blocks.
SufficientStats absorb(Generator& gen, const Instance& in, double gamma, GammaMode mode) {
  SufficientStats s = SufficientStats::empty(in.n, mode, mode == GammaMode::fixed ? gamma : 1.0);
  const long N = in.y.size();
  long start = 1;
  while (start <= N) {
    const long count = std::min<long>(gen.integer(1, 25), N - start + 1);
    const RegressorBlock b = build_block(span_of(in.u), span_of(in.y), start, in.n, count);
    s = mode == GammaMode::unweighted ? update_unweighted(std::move(s), b) : update_weighted(std::move(s), b, gamma);
    start += count;
  }
  return s;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

CheckOutcome check_likelihood_oracle(int instances, std::uint64_t seed, double tolerance) {
  const auto t0 = std::chrono::steady_clock::now();
  CheckOutcome out{"likelihood oracle", instances, 0.0, tolerance};
  Generator gen(seed);
  for (int i = 0; i < instances; ++i) {
    const Instance in = gen.instance(30, 300);
    const bool weighted = i % 2 == 1;
    const double gamma = weighted ? in.gamma : 1.0;
    const SufficientStats s = absorb(gen, in, gamma, weighted ? GammaMode::fixed : GammaMode::unweighted);
    const double fast = eval_f(s, tc_kernel({in.lambda, in.beta, {}}, in.n), in.sigma2, s.count).value;

    const Mat Phi = reference::toeplitz_regressors(in.u, in.n);
    const double dense = reference::neg_log_marginal(Phi, in.y, reference::forgetting_weights(in.y.size(), gamma),
                                                     reference::tc_matrix(in.lambda, in.beta, in.n), in.sigma2);
    out.worst = std::max(out.worst, rel(fast, dense));
  }
  out.seconds = seconds_since(t0);
  return out;
}

CheckOutcome check_gradients(int instances, std::uint64_t seed, double tolerance) {
  const auto t0 = std::chrono::steady_clock::now();
  CheckOutcome out{"gradient vs finite differences", instances, 0.0, tolerance};
  Generator gen(seed);
  for (int i = 0; i < instances; ++i) {
    const Instance in = gen.instance(30, 300);
    const long N = in.y.size();
    const long split = N - gen.integer(1, 20);

    // Previous statistics up to `split`, candidate block after it.
    SufficientStats prev = SufficientStats::empty(in.n, GammaMode::adaptive);
    prev = update_weighted(std::move(prev), build_block(span_of(in.u), span_of(in.y), 1, in.n, split), in.gamma);
    const RegressorBlock block = build_block(span_of(in.u), span_of(in.y), split + 1, in.n, N - split);
    const SufficientStats cand = update_weighted(prev, block, in.gamma);

    const MlEvaluation ev = eval_grad_eta(cand, tc_kernel({in.lambda, in.beta, {}}, in.n), in.sigma2, N);
    const double g_gamma = eval_grad_gamma(prev, block, {in.lambda, in.beta, {}}, in.sigma2, in.gamma, N);

    auto f_eta = [&](double lambda, double beta) {
      return eval_f(cand, tc_kernel({lambda, beta, {}}, in.n), in.sigma2, N).value;
    };
    auto f_gamma = [&](double gamma) {
      return eval_f(update_weighted(prev, block, gamma), tc_kernel({in.lambda, in.beta, {}}, in.n), in.sigma2, N)
          .value;
    };
    const double fd_lambda = reference::central_difference([&](double x) { return f_eta(x, in.beta); }, in.lambda,
                                                           1e-5 * (1.0 + in.lambda));
    const double fd_beta = reference::central_difference([&](double x) { return f_eta(in.lambda, x); }, in.beta,
                                                         1e-5 * (1.0 + in.beta));
    const double fd_gamma = reference::central_difference(f_gamma, in.gamma, 1e-5 * (1.0 + in.gamma));

    out.worst = std::max({out.worst, rel(ev.grad(0), fd_lambda), rel(ev.grad(1), fd_beta), rel(g_gamma, fd_gamma)});
  }
  out.seconds = seconds_since(t0);
  return out;
}

CheckOutcome check_recursive_stats(int instances, std::uint64_t seed, double tolerance) {
  const auto t0 = std::chrono::steady_clock::now();
  CheckOutcome out{"recursive vs batch statistics", instances, 0.0, tolerance};
  Generator gen(seed);
  for (int i = 0; i < instances; ++i) {
    const Instance in = gen.instance(20, 500);
    const SufficientStats s = absorb(gen, in, in.gamma, GammaMode::fixed);
    const Mat Phi = reference::toeplitz_regressors(in.u, in.n);
    const Vec w = reference::forgetting_weights(in.y.size(), in.gamma);
    const Mat R = Phi.transpose() * w.asDiagonal() * Phi;
    const Vec Yt = Phi.transpose() * w.asDiagonal() * in.y;
    const double Yb = in.y.dot(w.cwiseProduct(in.y));
    out.worst = std::max({out.worst, rel(s.R, R), rel(Mat(s.Yt), Mat(Yt)), rel(s.Yb, Yb)});
  }
  out.seconds = seconds_since(t0);
  return out;
}

CheckOutcome check_posterior_oracle(int instances, std::uint64_t seed, double tolerance) {
  const auto t0 = std::chrono::steady_clock::now();
  CheckOutcome out{"posterior mean oracle", instances, 0.0, tolerance};
  Generator gen(seed);
  for (int i = 0; i < instances; ++i) {
    Instance in = gen.instance(10, 200);
    in.n = 10;
    const double gamma = i % 2 == 0 ? 1.0 : in.gamma;
    const SufficientStats s = absorb(gen, in, gamma, i % 2 == 0 ? GammaMode::unweighted : GammaMode::fixed);
    const Vec fast = posterior_mean(s, tc_kernel({in.lambda, in.beta, {}}, in.n), in.sigma2);
    const Vec dense = reference::regularized_solution(reference::toeplitz_regressors(in.u, in.n), in.y,
                                                      reference::forgetting_weights(in.y.size(), gamma),
                                                      reference::tc_matrix(in.lambda, in.beta, in.n), in.sigma2);
    out.worst = std::max(out.worst, rel(Mat(fast), Mat(dense)));
  }
  out.seconds = seconds_since(t0);
  return out;
}

CheckOutcome check_rls_oracle(int instances, std::uint64_t seed, double tolerance) {
  const auto t0 = std::chrono::steady_clock::now();
  CheckOutcome out{"RLS vs weighted least squares", instances, 0.0, tolerance};
  Generator gen(seed);
  for (int i = 0; i < instances; ++i) {
    Instance in = gen.instance(20, 300);
    const long N = 300;
    in.u.resize(N);
    in.y.resize(N);
    for (long t = 0; t < N; ++t) {
      in.u(t) = gen.normal();
      in.y(t) = gen.normal();
    }
    const long init = 2L * in.n;
    RlsState s = rls_initialize(build_block(span_of(in.u), span_of(in.y), 1, in.n, init), in.gamma);
    s = rls_update(std::move(s), build_block(span_of(in.u), span_of(in.y), init + 1, in.n, N - init));
    const Vec dense = reference::weighted_least_squares(reference::toeplitz_regressors(in.u, in.n), in.y,
                                                        reference::forgetting_weights(N, in.gamma));
    out.worst = std::max(out.worst, rel(Mat(s.theta), Mat(dense)));
  }
  out.seconds = seconds_since(t0);
  return out;
}

}  // namespace tvsid
