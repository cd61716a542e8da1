#include "doctest.h"
#include "helpers.hpp"

#include "tvsid/kernel.hpp"
#include "tvsid/reference.hpp"

using namespace tvsid;

TEST_CASE("TC kernel small example") {
  const KernelFactor kf = tc_kernel({1.0, 0.5, std::nullopt}, 2);
  Mat expected(2, 2);
  expected << 0.5, 0.25, 0.25, 0.25;
  CHECK(testing::rel_err(kf.K, expected) <= 1e-15);
}

TEST_CASE("lambda = 0 gives the zero kernel") {
  const KernelFactor kf = tc_kernel({0.0, 0.8, std::nullopt}, 5);
  CHECK(kf.K.norm() == 0.0);
  CHECK(kf.L.norm() == 0.0);
}

TEST_CASE("kernel matches the min-of-powers definition") {
  for (double beta : {0.3, 0.7, 0.9, 0.99}) {
    const KernelFactor kf = tc_kernel({2.5, beta, std::nullopt}, 40);
    CHECK(testing::rel_err(kf.K, reference::tc_matrix(2.5, beta, 40)) <= 1e-13);
  }
}

TEST_CASE("Cholesky factor reconstructs K") {
  for (double beta : {0.2, 0.5, 0.8, 0.95, 0.9999}) {
    for (int n : {1, 2, 10, 100}) {
      const KernelFactor kf = tc_kernel({3.0, beta, std::nullopt}, n);
      CHECK(testing::rel_err(kf.L * kf.L.transpose(), kf.K) <= 1e-10);
      CHECK(kf.L.isLowerTriangular());
    }
  }
}

TEST_CASE("kernel is linear in lambda") {
  const KernelFactor a = tc_kernel({1.3, 0.85, std::nullopt}, 30);
  const KernelFactor b = tc_kernel({1.3 * 7.0, 0.85, std::nullopt}, 30);
  CHECK(testing::rel_err(b.K, 7.0 * a.K) <= 1e-14);
}

TEST_CASE("kernel entries decay away from the diagonal") {
  const KernelFactor kf = tc_kernel({1.0, 0.9, std::nullopt}, 25);
  for (int k = 0; k < 25; ++k) {
    for (int j = k; j < 25; ++j) CHECK(kf.K(k, k) >= kf.K(k, j));
  }
}

TEST_CASE("kernel derivatives match finite differences") {
  const double lambda = 2.0;
  const double beta = 0.87;
  const int n = 20;
  const KernelFactor kf = tc_kernel({lambda, beta, std::nullopt}, n);
  const double hb = 1e-5 * (1 + beta);
  const Mat fd_beta = (reference::tc_matrix(lambda, beta + hb, n) - reference::tc_matrix(lambda, beta - hb, n)) / (2 * hb);
  CHECK(testing::rel_err(kf.dK_dbeta, fd_beta) <= 1e-7);
  CHECK(testing::rel_err(kf.dK_dlambda, reference::tc_matrix(1.0, beta, n)) <= 1e-14);
}

TEST_CASE("kernel rejects invalid hyper-parameters") {
  CHECK_THROWS_AS(tc_kernel({-1.0, 0.5, std::nullopt}, 3), InvalidArgument);
  CHECK_THROWS_AS(tc_kernel({1.0, 1.5, std::nullopt}, 3), InvalidArgument);
  CHECK_THROWS_AS(tc_kernel({1.0, 0.0, std::nullopt}, 3), InvalidArgument);
  CHECK_THROWS_AS(tc_kernel({std::nan(""), 0.5, std::nullopt}, 3), InvalidArgument);
  CHECK_THROWS_AS(tc_kernel({1.0, 0.5, std::nullopt}, 0), InvalidArgument);
}

TEST_CASE("project_box") {
  const Box omega;
  SUBCASE("interior point unchanged") {
    const HyperParams p{2.0, 0.5, 0.95};
    const HyperParams q = project_box(p, omega);
    CHECK(q.lambda == 2.0);
    CHECK(q.beta == 0.5);
    CHECK(*q.gamma == 0.95);
  }
  SUBCASE("negative lambda goes to the lower bound") {
    CHECK(project_box(HyperParams{-1.0, 0.5, std::nullopt}, omega).lambda == 1e-8);
  }
  SUBCASE("clamp is the metric projection for any diagonal metric") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-2.0, 3.0);
    std::uniform_real_distribution<double> D(0.01, 100.0);
    for (int trial = 0; trial < 200; ++trial) {
      const Vec z{{U(rng), U(rng), U(rng)}};
      const Vec d{{D(rng), D(rng), D(rng)}};
      const Vec x = project_box(z, omega);
      const Vec lo = omega.lower(3);
      const Vec hi = omega.upper(3);
      for (int j = 0; j < 3; ++j) {
        // (x - z)^2 / d is convex on [lo, hi]; ternary search for its minimizer
        double a = lo(j);
        double b = hi(j);
        const auto q = [&](double t) { return (t - z(j)) * (t - z(j)) / d(j); };
        for (int it = 0; it < 300; ++it) {
          const double m1 = a + (b - a) / 3.0;
          const double m2 = b - (b - a) / 3.0;
          if (q(m1) <= q(m2)) b = m2; else a = m1;
        }
        CHECK(std::abs(x(j) - 0.5 * (a + b)) <= 1e-9 * std::max(1.0, std::abs(x(j))));
      }
      CHECK(omega.contains(x));
    }
  }
}

TEST_CASE("robust_cholesky recovers from a singular matrix") {
  Mat A = Mat::Ones(4, 4);
  const Mat L = robust_cholesky(A);
  CHECK(testing::rel_err(L * L.transpose(), A) <= 1e-8);
  Mat bad = -Mat::Identity(3, 3);
  CHECK_THROWS_AS(robust_cholesky(bad), NumericalFailure);
}
