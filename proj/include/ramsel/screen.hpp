#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "ramsel/stats.hpp"

namespace ramsel {

/// Screening threshold, given either as a tolerated false-positive rate tau
/// (lambda = Phi^{-1}(1 - tau)) or as an explicit lambda.
class ScreenConfig {
public:
  static ScreenConfig from_tau(double tau);
  static ScreenConfig from_lambda(double lambda);

  double lambda() const noexcept { return lambda_; }
  std::optional<double> tau() const noexcept { return tau_; }

private:
  ScreenConfig(std::optional<double> tau, double lambda) : tau_(tau), lambda_(lambda) {}
  std::optional<double> tau_;
  double lambda_;
};

struct ScreenResult {
  /// One entry per candidate; NaN for skipped candidates, +inf for perfect fits.
  std::vector<double> tstats;
  double lambda = 0.0;
  /// Indices j with |t_j| > lambda, ascending.
  std::vector<std::size_t> selected;
  /// Candidates dropped because [officials | candidate] was singular or
  /// ill-conditioned.
  std::vector<std::size_t> skipped;
};

/// Condition-number bound on the equilibrated Gram matrix of [officials | candidate].
inline constexpr double kScreenConditionLimit = 1e12;

/// Per-candidate t-statistics conditional on a fixed set of official
/// regressors. The officials are factored once; each candidate then costs
/// O(T * N1). Thread-safe for concurrent tstat() calls.
class Screener {
public:
  /// `officials` must include the intercept column. Throws
  /// InsufficientSampleError when T <= N1 + 1 and SingularDesignError when the
  /// officials alone are rank deficient.
  Screener(const Vector& y, const Matrix& officials);

  /// OLS t-statistic of the candidate in y ~ [officials | candidate] with
  /// homoskedastic standard error and T - N1 - 1 degrees of freedom.
  /// Throws SingularDesignError for collinear or ill-conditioned candidates.
  double tstat(const Eigen::Ref<const Vector>& candidate) const;

  /// t-statistics for every column; singular columns get NaN and are listed
  /// in `skipped`.
  std::vector<double> tstats(const Matrix& candidates, unsigned threads = 1,
                             std::vector<std::size_t>* skipped = nullptr) const;

  Eigen::Index observations() const noexcept { return y_.size(); }
  Eigen::Index official_count() const noexcept { return officials_.cols(); }

private:
  Vector y_;
  Matrix officials_;
  Matrix q_;           // orthonormal basis of span(officials)
  Vector y_resid_;     // y minus its projection on the officials
  Matrix gram_;        // officials' Gram matrix
  double y_norm_sq_ = 0.0;
};

double tstat_single(const Vector& y, const Matrix& officials, const Vector& candidate);

/// Indices with |t| > lambda (strict), ascending. NaN never passes.
std::vector<std::size_t> select_above(std::span<const double> tstats, double lambda);

ScreenResult screen(const Vector& y, const Matrix& officials, const Matrix& candidates,
                    const ScreenConfig& cfg, unsigned threads = 1);

}  // namespace ramsel
