#pragma once

// Slow dense routes that work directly in data space. They share no code
// with the recursive / n-dimensional implementations and serve as oracles
// for tests and `tvsid_bench validate`.

#include "tvsid/common.hpp"

#include <functional>

namespace tvsid::reference {

/// diag(gamma^(N-1), ..., gamma^0)
Vec forgetting_weights(long N, double gamma);

/// Phi with rows [u(t), ..., u(t-n+1)], t = 1..N, by direct indexing.
Mat toeplitz_regressors(const Vec& u, int n);

/// K[k,j] = lambda min(beta^k, beta^j), 1-based.
Mat tc_matrix(double lambda, double beta, int n);

/// Y' G Sigma^-1 G Y + ln det Sigma with Sigma = G Phi K Phi' G + sigma2 I,
/// G = sqrt(diag(weights)); an N x N computation.
double neg_log_marginal(const Mat& Phi, const Vec& Y, const Vec& weights, const Mat& K, double sigma2);

/// argmin (Y - Phi h)' W (Y - Phi h) + sigma2 h' K^-1 h from the normal
/// equations with an explicit K^-1.
Vec regularized_solution(const Mat& Phi, const Vec& Y, const Vec& weights, const Mat& K, double sigma2);

/// argmin sum_t w_t (y_t - phi_t' theta)^2 by QR on sqrt(w)-scaled rows.
Vec weighted_least_squares(const Mat& Phi, const Vec& Y, const Vec& weights);

/// Five-point central difference.
double central_difference(const std::function<double(double)>& f, double x, double h);

}  // namespace tvsid::reference
