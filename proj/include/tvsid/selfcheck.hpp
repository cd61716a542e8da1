#pragma once

#include <cstdint>
#include <string>

namespace tvsid {

/// Worst relative discrepancy found by one randomized oracle comparison.
struct CheckOutcome {
  std::string name;
  int instances = 0;
  double worst = 0.0;
  double tolerance = 0.0;
  double seconds = 0.0;

  [[nodiscard]] bool passed() const { return worst <= tolerance; }
};

/// eval_f against the N-dimensional definition (N <= 300, n <= 30).
CheckOutcome check_likelihood_oracle(int instances, std::uint64_t seed, double tolerance);

/// d/dlambda, d/dbeta, d/dgamma against five-point finite differences.
CheckOutcome check_gradients(int instances, std::uint64_t seed, double tolerance);

/// Blockwise weighted statistics against dense Phi' Gamma Phi products (k <= 500).
CheckOutcome check_recursive_stats(int instances, std::uint64_t seed, double tolerance);

/// posterior_mean against the dense regularized normal equations (n = 10).
CheckOutcome check_posterior_oracle(int instances, std::uint64_t seed, double tolerance);

/// Forgetting-factor RLS against dense weighted least squares.
CheckOutcome check_rls_oracle(int instances, std::uint64_t seed, double tolerance);

}  // namespace tvsid
