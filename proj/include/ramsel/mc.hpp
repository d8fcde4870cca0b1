#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ramsel/ridge.hpp"
#include "ramsel/stats.hpp"

namespace ramsel {

enum class PsiKind {
  identity,    ///< independent idiosyncratic terms
  decreasing,  ///< Psi_jk = rho^|j-k|
};

std::string_view to_string(PsiKind p);
PsiKind parse_psi(std::string_view s);

/// Simulation design
///   y_t = gamma' z_t + beta' x_t + v_t,
///   x_jt = delta (z_1t + z_2t) + u_jt,  u_t ~ N(0, Psi),
///   z_t ~ N(0, [[1, .3], [.3, 1]]),  gamma = (1, 2)',  v_t ~ N(0, 1),
///   beta_j ~ N(0, 1) for j <= s and 0 otherwise.
struct DgpConfig {
  int n = 150;
  int t = 100;
  int s = 105;
  double delta = 0.2;
  PsiKind psi = PsiKind::identity;
  double rho = 0.5;
  std::uint64_t seed = 0;
  /// Draw beta once per seed instead of once per replication.
  bool fix_beta = false;
  /// Active coefficients are pushed away from zero: |beta_j| >= beta_floor.
  double beta_floor = 0.0;

  /// Throws ConfigError on inconsistent dimensions or parameters.
  void validate() const;
  bool operator==(const DgpConfig&) const = default;
};

inline constexpr double kZCorrelation = 0.3;
inline constexpr double kGamma1 = 1.0;
inline constexpr double kGamma2 = 2.0;

struct DgpSample {
  Vector y;
  Matrix z;  ///< rows x 2
  Matrix x;  ///< rows x n
  Vector beta;
  Vector gamma;
};

/// Draws `rows` observations for replication `replication`. The draw depends
/// only on (cfg, rows, replication).
DgpSample simulate_dgp(const DgpConfig& cfg, int rows, std::uint64_t replication = 0);

/// Population second-moment matrix of (1, z_1, z_2, x_1..x_n).
Matrix population_second_moment(const DgpConfig& cfg);

/// sigma2 + (beta_hat - beta_true)' Sigma (beta_hat - beta_true).
double conditional_mspe(const Vector& beta_hat, const Vector& beta_true, double sigma2,
                        const Matrix& sigma);

/// Coefficients of (1, z_1, z_2, x) in the true regression.
Vector true_coefficients(const DgpSample& sample);

struct McOptions {
  int replications = 500;
  /// Held-out rows as a fraction of T.
  double oos_fraction = 0.5;
  std::vector<double> fdr{0.20, 0.10, 0.05, 0.025, 0.01, 0.005};
  std::vector<double> alphas = AlphaGrid{}.points();
  RidgeOptions ridge;
  unsigned threads = 1;

  void validate() const;
};

struct McReport {
  DgpConfig config;
  McOptions options;
  /// replications x fdr
  Matrix in_sample_mse;
  Matrix oos_mse;
  Matrix selected;
  /// Per fdr level, averaged over replications.
  std::vector<MeanSe> in_sample;
  std::vector<MeanSe> oos;
  std::vector<double> mean_selected;
};

/// Ridge after selection on every replication: officials (1, z_1, z_2),
/// candidates x, one screening threshold per fdr level. In-sample MSE is the
/// residual mean square on the T training rows, out-of-sample MSE the mean
/// squared prediction error on the held-out rows.
McReport run_mc(const DgpConfig& cfg, const McOptions& options);

struct RatioCell {
  double mser = 0.0;
  double mser_se = 0.0;
  double msfer = 0.0;
  double msfer_se = 0.0;
};

/// Ratios of averaged MSEs, per fdr level, with delta-method standard errors
/// for independent runs. A report against itself gives exactly 1 and zero error.
std::vector<RatioCell> ratios(const McReport& num, const McReport& den);

struct Dims {
  int n = 0;
  int t = 0;
  int s = 0;
  bool operator==(const Dims&) const = default;
};

inline constexpr Dims kTableBaseline{150, 100, 105};
inline constexpr Dims kTableColumns[] = {{200, 150, 105}, {200, 150, 110}, {200, 100, 110}};

struct TableBlock {
  PsiKind psi = PsiKind::identity;
  McReport baseline;
  std::vector<McReport> columns;
  /// cells[column][fdr]
  std::vector<std::vector<RatioCell>> cells;
};

struct McTable {
  double delta = 0.2;
  std::vector<Dims> dims;
  std::vector<double> fdr;
  std::vector<TableBlock> blocks;
};

/// One ratio table for a given delta: blocks for Psi = identity and
/// decreasing, columns kTableColumns, baseline kTableBaseline.
McTable run_table(double delta, const McOptions& options, std::uint64_t seed,
                  std::span<const Dims> dims = kTableColumns, Dims baseline = kTableBaseline);

/// Rows psi x fdr; for every column a pair (MSER, MSFER).
void write_table_csv(std::ostream& out, const McTable& table);
/// Same layout with the Monte Carlo standard errors.
void write_table_se_csv(std::ostream& out, const McTable& table);
std::string format_table(const McTable& table);

/// A claim that a ratio lies below (or above) one, tested with slack k * se.
struct DirectionalCheck {
  std::string name;
  std::string detail;
  bool passed = false;
};

struct ScalingReport {
  std::vector<Dims> dims;
  std::vector<std::vector<RatioCell>> cells;  ///< vs the first configuration
  std::vector<DirectionalCheck> checks;
  bool passed() const;
};

/// Directional findings for a sweep whose first entry is the baseline:
///  T up with N up (same s): MSER and MSFER below one in every fdr row;
///  s up at fixed N, T: ratios above those of the smaller s in every row;
///  N and s up at fixed T: MSER below one in most rows, MSFER above one in all.
/// Configurations that match none of the patterns only contribute ratios.
ScalingReport directional_checks(std::span<const Dims> dims,
                                 const std::vector<std::vector<RatioCell>>& cells, double k);
ScalingReport verify_error_scaling(const DgpConfig& base, std::span<const Dims> sweep,
                                   const McOptions& options, double k = 2.0);
/// Checks both Psi blocks of a precomputed table.
ScalingReport table_directional_checks(const McTable& table, double k = 2.0);

struct GcvOosConfig {
  DgpConfig dgp{.n = 50, .t = 100, .s = 5};
  std::vector<int> t_values{100, 200, 400};
  int replications = 100;
  double tau = 0.10;
  std::vector<double> alphas = AlphaGrid{}.points();
  RidgeOptions ridge;
  unsigned threads = 1;
};

struct GcvOosRow {
  int t = 0;
  /// rho2(alpha_hat) - rho2(alpha_star), per replication
  std::vector<double> regret;
  /// |GCV(alpha_hat) - rho2(alpha_hat)|, per replication
  std::vector<double> gap;
  double median_regret = 0.0;
  double median_gap = 0.0;
};

struct GcvOosReport {
  std::vector<GcvOosRow> rows;
  bool regret_nonnegative() const;
  /// Medians at the last T below those at the first T.
  bool regret_shrinks() const;
  bool gap_shrinks() const;
};

/// Compares the GCV choice with the oracle penalty that minimizes the exact
/// conditional MSPE over the same grid.
GcvOosReport verify_gcv_oos(const GcvOosConfig& cfg);

struct SureScreeningConfig {
  DgpConfig dgp{.n = 100, .t = 100, .s = 5, .beta_floor = 2.0};
  std::vector<int> t_values{100, 200, 400};
  int replications = 200;
  double tau = 0.10;
  unsigned threads = 1;
};

struct SureScreeningReport {
  std::vector<int> t_values;
  /// Share of replications whose selection contains every active candidate.
  std::vector<double> frequency;
  std::vector<double> mean_selected;
  bool monotone() const;
};

SureScreeningReport sure_screening_frequency(const SureScreeningConfig& cfg);

}  // namespace ramsel
