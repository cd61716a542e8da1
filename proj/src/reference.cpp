#include "tvsid/reference.hpp"

#include <algorithm>
#include <cmath>

namespace tvsid::reference {

Vec forgetting_weights(long N, double gamma) {
  Vec w(N);
  for (long t = 0; t < N; ++t) w(t) = std::pow(gamma, static_cast<double>(N - 1 - t));
  return w;
}

Mat toeplitz_regressors(const Vec& u, int n) {
  const long N = u.size();
  Mat Phi = Mat::Zero(N, n);
  for (long t = 0; t < N; ++t) {
    for (int j = 0; j < n; ++j) {
      if (t - j >= 0) Phi(t, j) = u(t - j);
    }
  }
  return Phi;
}

Mat tc_matrix(double lambda, double beta, int n) {
  Mat K(n, n);
  for (int k = 1; k <= n; ++k) {
    for (int j = 1; j <= n; ++j) K(k - 1, j - 1) = lambda * std::min(std::pow(beta, k), std::pow(beta, j));
  }
  return K;
}

double neg_log_marginal(const Mat& Phi, const Vec& Y, const Vec& weights, const Mat& K, double sigma2) {
  const long N = Phi.rows();
  const Vec g = weights.array().sqrt();
  const Mat GPhi = g.asDiagonal() * Phi;
  const Vec GY = g.cwiseProduct(Y);
  Mat Sigma = GPhi * K * GPhi.transpose();
  Sigma.diagonal().array() += sigma2;
  const Eigen::LLT<Mat> llt(Sigma);
  const Mat Lc = llt.matrixL();
  double logdet = 0.0;
  for (long i = 0; i < N; ++i) logdet += 2.0 * std::log(Lc(i, i));
  return GY.dot(llt.solve(GY)) + logdet;
}

Vec regularized_solution(const Mat& Phi, const Vec& Y, const Vec& weights, const Mat& K, double sigma2) {
  const Mat Kinv = K.fullPivLu().inverse();
  const Mat A = Phi.transpose() * weights.asDiagonal() * Phi + sigma2 * Kinv;
  const Vec b = Phi.transpose() * weights.asDiagonal() * Y;
  return A.fullPivLu().solve(b);
}

Vec weighted_least_squares(const Mat& Phi, const Vec& Y, const Vec& weights) {
  const Vec g = weights.array().sqrt();
  const Mat A = g.asDiagonal() * Phi;
  const Vec b = g.cwiseProduct(Y);
  return A.colPivHouseholderQr().solve(b);
}

double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h);
}

}  // namespace tvsid::reference
