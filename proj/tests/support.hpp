#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ramsel/bridge.hpp"
#include "ramsel/dataset.hpp"
#include "ramsel/stats.hpp"

namespace ramsel::testing {

/// Outcome of a randomized property check.
struct CheckResult {
  bool passed = true;
  int cases = 0;
  std::string detail;

  void fail(const std::string& msg) {
    if (passed) detail = msg;
    passed = false;
  }
};

Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols);
Vector random_vector(std::mt19937_64& rng, Eigen::Index n);

/// beta solving (X'X + T alpha I) beta = X'y with a full-pivot LU on the p x p system.
Vector dense_ridge_oracle(const Matrix& x, const Vector& y, double alpha);

struct DenseGcv {
  double rss = 0.0;
  double trace = 0.0;
  double gcv = 0.0;
};
/// Forms H = X (X'X/T + alpha I)^{-1} X'/T explicitly, or I - H in its dual
/// form when p >= T.
DenseGcv dense_gcv_oracle(const Matrix& x, const Vector& y, double alpha);

/// t-statistic of the last column in an OLS fit on [officials | candidate]
/// via the inverse of the normal-equation matrix.
double ols_tstat_oracle(const Vector& y, const Matrix& officials, const Vector& candidate);

/// Root of Phi(x) = p by bisection on erfc.
double normal_quantile_oracle(double p);

/// Standardized ridge with an intercept, computed from the dense oracle on
/// [1 | centered and scaled columns] and mapped back to the original scale.
Vector standardized_ridge_oracle(const Matrix& x_with_intercept, const Vector& y, double alpha);

/// Small synthetic panel for randomized checks.
Panel small_panel(std::uint64_t seed, int quarters = 40, int alt = 6);

CheckResult check_ridge_oracle(int problems, std::uint64_t seed);
CheckResult check_gcv_oracle(int problems, std::uint64_t seed);
CheckResult check_tau_monotonicity(int cases, std::uint64_t seed);
CheckResult check_scale_invariance(int cases, std::uint64_t seed);
CheckResult check_nested_information(int cases, std::uint64_t seed);
CheckResult check_no_lookahead(int cases, std::uint64_t seed);
CheckResult check_rerun_determinism(int cases, std::uint64_t seed);
/// Per-week RMSFE of ridge after selection on the panel is nonincreasing.
CheckResult check_rmsfe_profile(const Panel& panel);
/// officials_only nowcast for one quarter and week against a hand-built
/// design, dense-oracle GCV search and dense-oracle ridge.
CheckResult check_officials_only_manual(const Panel& panel, Quarter q, int week);

}  // namespace ramsel::testing
