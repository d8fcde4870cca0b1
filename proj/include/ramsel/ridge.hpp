#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "ramsel/screen.hpp"
#include "ramsel/stats.hpp"

namespace ramsel {

enum class GridSpacing { log, linear };

/// Candidate penalties for GCV search.
struct AlphaGrid {
  double lo = 1e-6;
  double hi = 1e2;
  int count = 100;
  GridSpacing spacing = GridSpacing::log;

  /// Throws ConfigError unless 0 < lo < hi and count >= 2.
  void validate() const;
  /// Strictly increasing grid points, endpoints included.
  std::vector<double> points() const;
};

/// Closed-form ridge estimate (X'X/T + alpha I)^{-1} X'y/T. Every column is
/// penalized, including an intercept column if X has one. p may exceed T.
Vector ridge_solve(const Matrix& x, const Vector& y, double alpha);

/// GCV(alpha) = RSS / (T (1 - tr(H_alpha)/T)^2) on the raw design, with
/// H_alpha = X (X'X/T + alpha I)^{-1} X'/T.
double gcv(const Matrix& x, const Vector& y, double alpha);

struct RidgeOptions {
  /// Center and scale non-intercept columns to zero mean and unit variance
  /// over the fitting sample; coefficients are reported on the original scale.
  bool standardize = true;
  /// Apply the penalty to the intercept coefficient as well.
  bool penalize_intercept = true;
};

/// Singular-value form of a ridge problem. The decomposition is computed once;
/// every per-alpha query is then O(min(T, p)) or O(T p). Immutable after
/// construction and safe to query concurrently.
///
/// The first column made entirely of ones is treated as the intercept. When
/// the other columns are centered (standardize, or an unpenalized intercept)
/// the intercept decouples and is solved analytically.
class RidgePath {
public:
  RidgePath(const Matrix& x, const Vector& y, RidgeOptions options = {});

  double gcv(double alpha) const;
  double trace_hat(double alpha) const;
  double rss(double alpha) const;
  /// Coefficients on the scale of the input design, length p.
  Vector coefficients(double alpha) const;

  Eigen::Index observations() const noexcept { return t_; }
  Eigen::Index columns() const noexcept { return p_; }
  const RidgeOptions& options() const noexcept { return options_; }
  /// Singular values of the (transformed) penalized block.
  const Vector& singular_values() const noexcept { return d_; }

private:
  void check_alpha(double alpha) const;
  double intercept_factor(double alpha) const;

  Eigen::Index t_ = 0;
  Eigen::Index p_ = 0;
  RidgeOptions options_;
  std::optional<Eigen::Index> intercept_;
  bool decoupled_ = false;
  double y_mean_ = 0.0;
  std::vector<Eigen::Index> core_cols_;  // original index of each core column
  Vector center_;                        // per core column
  Vector scale_;                         // per core column, 0 marks a dropped column
  Matrix u_;
  Vector d_;
  Matrix v_;
  Vector uty_;
  double resid_perp_sq_ = 0.0;
};

struct GcvPoint {
  double alpha = 0.0;
  double gcv = 0.0;
};

struct RidgeFit {
  /// Length N, zero outside `selected`.
  Vector coefficients;
  double alpha = 0.0;
  double gcv_value = 0.0;
  std::vector<GcvPoint> gcv_path;
  /// Column indices that were allowed to be nonzero, ascending.
  std::vector<std::size_t> selected;
  RidgeOptions options;
  /// Screening outcome when the fit came from ridge_after_selection.
  std::optional<ScreenResult> screening;

  Vector predict(const Matrix& x) const { return x * coefficients; }
};

/// Evaluates GCV at every alpha (ascending) and returns the fit at the
/// arg-min; exact ties go to the larger alpha.
RidgeFit gcv_minimize(const Matrix& x, const Vector& y, std::span<const double> alphas,
                      RidgeOptions options = {});
RidgeFit gcv_minimize(const Matrix& x, const Vector& y, const AlphaGrid& grid,
                      RidgeOptions options = {});

/// Two-step estimator: screen the candidates conditional on the officials,
/// then ridge with GCV on [officials | selected candidates]. The returned
/// coefficient vector has N1 + N_g entries in the order [officials, candidates].
RidgeFit ridge_after_selection(const Vector& y, const Matrix& officials,
                               const Matrix& candidates, const ScreenConfig& screen_cfg,
                               std::span<const double> alphas, RidgeOptions options = {},
                               unsigned threads = 1);
RidgeFit ridge_after_selection(const Vector& y, const Matrix& officials,
                               const Matrix& candidates, const ScreenConfig& screen_cfg,
                               const AlphaGrid& grid, RidgeOptions options = {},
                               unsigned threads = 1);

/// Ridge + GCV on [officials | candidates listed in `chosen`]. Coefficients are
/// laid out as in ridge_after_selection.
RidgeFit ridge_on_subset(const Vector& y, const Matrix& officials, const Matrix& candidates,
                         std::span<const std::size_t> chosen, std::span<const double> alphas,
                         RidgeOptions options = {});

/// Ridge + GCV on [officials | all candidates] without screening.
RidgeFit ridge_without_selection(const Vector& y, const Matrix& officials,
                                 const Matrix& candidates, std::span<const double> alphas,
                                 RidgeOptions options = {});

/// Extreme eigenvalues of X_M'X_M/T on a support M: kappa^2 (min), phi (max)
/// and the condition number mu = sqrt(phi)/kappa.
struct SupportEigenvalues {
  double kappa_sq = 0.0;
  double phi = 0.0;
  double mu = 0.0;
};
SupportEigenvalues support_eigenvalues(const Matrix& x, std::span<const std::size_t> support);

/// Columns of x listed in idx, in that order.
Matrix take_columns(const Matrix& x, std::span<const std::size_t> idx);

}  // namespace ramsel
