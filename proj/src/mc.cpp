#include "ramsel/mc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <sstream>

#include "ramsel/csv.hpp"
#include "ramsel/error.hpp"
#include "ramsel/parallel.hpp"
#include "ramsel/screen.hpp"

namespace ramsel {
namespace {

constexpr std::uint64_t kBetaStream = 0x9e3779b97f4a7c15ULL;

Vector draw_beta(const DgpConfig& cfg, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector beta = Vector::Zero(cfg.n);
  for (int j = 0; j < cfg.s; ++j) {
    const double b = normal(rng);
    beta(j) = b < 0.0 ? -std::max(cfg.beta_floor, -b) : std::max(cfg.beta_floor, b);
  }
  return beta;
}

Matrix officials_of(const Matrix& z) {
  Matrix o(z.rows(), 3);
  o.col(0).setOnes();
  o.rightCols(2) = z;
  return o;
}

template <typename E>
[[noreturn]] void rethrow_with_replication(const E& e, std::size_t rep) {
  throw E("replication " + std::to_string(rep) + ": " + e.what());
}

template <typename Fn>
void run_replications(std::size_t n, unsigned threads, Fn&& fn) {
  parallel_for(n, threads, [&](std::size_t rep) {
    try {
      fn(rep);
    } catch (const SingularDesignError& e) {
      rethrow_with_replication(e, rep);
    } catch (const NumericalError& e) {
      rethrow_with_replication(e, rep);
    } catch (const InsufficientSampleError& e) {
      rethrow_with_replication(e, rep);
    } catch (const DataError& e) {
      rethrow_with_replication(e, rep);
    }
  });
}

double ratio_se(double r, const MeanSe& a, const MeanSe& b) {
  const double ra = a.se / a.mean;
  const double rb = b.se / b.mean;
  return std::abs(r) * std::sqrt(ra * ra + rb * rb);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string dims_label(Dims d) {
  return "N" + std::to_string(d.n) + "_T" + std::to_string(d.t) + "_s" + std::to_string(d.s);
}

}  // namespace

std::string_view to_string(PsiKind p) {
  return p == PsiKind::identity ? "identity" : "decreasing";
}

PsiKind parse_psi(std::string_view s) {
  if (s == "identity" || s == "I" || s == "uncorrelated") return PsiKind::identity;
  if (s == "decreasing" || s == "ar1") return PsiKind::decreasing;
  throw ConfigError("unknown psi '" + std::string(s) + "' (expected identity or decreasing)");
}

void DgpConfig::validate() const {
  if (n < 1) throw ConfigError("dgp: N must be positive");
  if (t < 1) throw ConfigError("dgp: T must be positive");
  if (s < 0 || s > n) throw ConfigError("dgp: s must lie in 0..N");
  if (!std::isfinite(delta)) throw ConfigError("dgp: delta must be finite");
  if (!(rho > -1.0 && rho < 1.0)) throw ConfigError("dgp: rho must lie in (-1, 1)");
  if (!(beta_floor >= 0.0) || !std::isfinite(beta_floor)) {
    throw ConfigError("dgp: beta_floor must be nonnegative");
  }
}

DgpSample simulate_dgp(const DgpConfig& cfg, int rows, std::uint64_t replication) {
  cfg.validate();
  if (rows < 1) throw ConfigError("dgp: number of rows must be positive");
  std::mt19937_64 rng(stream_seed(cfg.seed, replication));
  std::normal_distribution<double> normal;
  DgpSample out;
  if (cfg.fix_beta) {
    std::mt19937_64 beta_rng(stream_seed(cfg.seed, kBetaStream));
    out.beta = draw_beta(cfg, beta_rng);
  } else {
    out.beta = draw_beta(cfg, rng);
  }
  out.gamma = Vector(2);
  out.gamma << kGamma1, kGamma2;

  const double z_tail = std::sqrt(1.0 - kZCorrelation * kZCorrelation);
  const double ar_tail = std::sqrt(1.0 - cfg.rho * cfg.rho);
  const bool ar = cfg.psi == PsiKind::decreasing;
  out.z.resize(rows, 2);
  out.x.resize(rows, cfg.n);
  out.y.resize(rows);
  for (int r = 0; r < rows; ++r) {
    const double e1 = normal(rng);
    const double e2 = normal(rng);
    const double z1 = e1;
    const double z2 = kZCorrelation * e1 + z_tail * e2;
    out.z(r, 0) = z1;
    out.z(r, 1) = z2;
    const double common = cfg.delta * (z1 + z2);
    double u = 0.0;
    for (int j = 0; j < cfg.n; ++j) {
      const double e = normal(rng);
      u = (ar && j > 0) ? cfg.rho * u + ar_tail * e : e;
      out.x(r, j) = common + u;
    }
    const double v = normal(rng);
    out.y(r) = kGamma1 * z1 + kGamma2 * z2 + out.x.row(r).dot(out.beta) + v;
  }
  return out;
}

Matrix population_second_moment(const DgpConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = cfg.n;
  Matrix sigma = Matrix::Zero(n + 3, n + 3);
  sigma(0, 0) = 1.0;
  sigma(1, 1) = 1.0;
  sigma(2, 2) = 1.0;
  sigma(1, 2) = sigma(2, 1) = kZCorrelation;
  // Cov(x_j, z_k) = delta * (1 + 0.3), Var(z1 + z2) = 2.6.
  const double xz = cfg.delta * (1.0 + kZCorrelation);
  const double xx = cfg.delta * cfg.delta * 2.0 * (1.0 + kZCorrelation);
  for (Eigen::Index j = 0; j < n; ++j) {
    sigma(3 + j, 1) = sigma(1, 3 + j) = xz;
    sigma(3 + j, 2) = sigma(2, 3 + j) = xz;
    for (Eigen::Index k = 0; k < n; ++k) {
      const double psi = cfg.psi == PsiKind::identity
                             ? (j == k ? 1.0 : 0.0)
                             : std::pow(cfg.rho, static_cast<double>(std::abs(j - k)));
      sigma(3 + j, 3 + k) = xx + psi;
    }
  }
  return sigma;
}

double conditional_mspe(const Vector& beta_hat, const Vector& beta_true, double sigma2,
                        const Matrix& sigma) {
  if (beta_hat.size() != beta_true.size() || sigma.rows() != beta_hat.size() ||
      sigma.cols() != beta_hat.size()) {
    throw DataError("conditional_mspe: dimension mismatch");
  }
  const Vector d = beta_hat - beta_true;
  return sigma2 + d.dot(sigma * d);
}

Vector true_coefficients(const DgpSample& sample) {
  Vector b(3 + sample.beta.size());
  b << 0.0, sample.gamma, sample.beta;
  return b;
}

void McOptions::validate() const {
  if (replications < 1) throw ConfigError("mc: replications must be at least 1");
  if (!(oos_fraction > 0.0) || !std::isfinite(oos_fraction)) {
    throw ConfigError("mc: oos_fraction must be positive");
  }
  if (fdr.empty()) throw ConfigError("mc: empty fdr grid");
  for (double f : fdr) {
    if (!(f > 0.0 && f < 1.0)) throw ConfigError("mc: fdr levels must lie in (0, 1)");
  }
  if (alphas.empty()) throw ConfigError("mc: empty alpha grid");
}

McReport run_mc(const DgpConfig& cfg, const McOptions& options) {
  cfg.validate();
  options.validate();
  const int t_oos = static_cast<int>(std::lround(options.oos_fraction * cfg.t));
  if (t_oos < 1) throw ConfigError("mc: out-of-sample window is empty");
  const auto reps = static_cast<std::size_t>(options.replications);
  const auto nf = static_cast<Eigen::Index>(options.fdr.size());
  std::vector<double> lambdas;
  for (double f : options.fdr) lambdas.push_back(normal_quantile(1.0 - f));

  McReport rep_out;
  rep_out.config = cfg;
  rep_out.options = options;
  rep_out.in_sample_mse.resize(static_cast<Eigen::Index>(reps), nf);
  rep_out.oos_mse.resize(static_cast<Eigen::Index>(reps), nf);
  rep_out.selected.resize(static_cast<Eigen::Index>(reps), nf);

  run_replications(reps, options.threads, [&](std::size_t rep) {
    const DgpSample smp = simulate_dgp(cfg, cfg.t + t_oos, rep);
    const Matrix off = officials_of(smp.z);
    const Matrix off_tr = off.topRows(cfg.t);
    const Matrix x_tr = smp.x.topRows(cfg.t);
    const Vector y_tr = smp.y.head(cfg.t);
    const Screener screener(y_tr, off_tr);
    const std::vector<double> tstats = screener.tstats(x_tr);

    std::vector<std::size_t> prev;
    double prev_in = 0.0;
    double prev_oos = 0.0;
    const auto r = static_cast<Eigen::Index>(rep);
    for (Eigen::Index f = 0; f < nf; ++f) {
      const auto chosen = select_above(tstats, lambdas[static_cast<std::size_t>(f)]);
      if (f == 0 || chosen != prev) {
        const RidgeFit fit =
            ridge_on_subset(y_tr, off_tr, x_tr, chosen, options.alphas, options.ridge);
        const Vector b_off = fit.coefficients.head(3);
        const Vector b_x = fit.coefficients.tail(cfg.n);
        const Vector resid = smp.y - off * b_off - smp.x * b_x;
        prev_in = resid.head(cfg.t).squaredNorm() / cfg.t;
        prev_oos = resid.tail(t_oos).squaredNorm() / t_oos;
        prev = chosen;
      }
      rep_out.in_sample_mse(r, f) = prev_in;
      rep_out.oos_mse(r, f) = prev_oos;
      rep_out.selected(r, f) = static_cast<double>(chosen.size());
    }
  });

  for (Eigen::Index f = 0; f < nf; ++f) {
    const Vector a = rep_out.in_sample_mse.col(f);
    const Vector b = rep_out.oos_mse.col(f);
    const Vector c = rep_out.selected.col(f);
    rep_out.in_sample.push_back(mean_and_se({a.data(), reps}));
    rep_out.oos.push_back(mean_and_se({b.data(), reps}));
    rep_out.mean_selected.push_back(mean_and_se({c.data(), reps}).mean);
  }
  return rep_out;
}

std::vector<RatioCell> ratios(const McReport& num, const McReport& den) {
  if (num.in_sample.size() != den.in_sample.size() || num.options.fdr != den.options.fdr) {
    throw ConfigError("ratios: reports use different fdr grids");
  }
  const bool same = &num == &den || (num.config == den.config &&
                                     num.in_sample_mse == den.in_sample_mse &&
                                     num.oos_mse == den.oos_mse);
  std::vector<RatioCell> out;
  for (std::size_t f = 0; f < num.in_sample.size(); ++f) {
    RatioCell c;
    c.mser = num.in_sample[f].mean / den.in_sample[f].mean;
    c.msfer = num.oos[f].mean / den.oos[f].mean;
    if (!same) {
      c.mser_se = ratio_se(c.mser, num.in_sample[f], den.in_sample[f]);
      c.msfer_se = ratio_se(c.msfer, num.oos[f], den.oos[f]);
    }
    out.push_back(c);
  }
  return out;
}

McTable run_table(double delta, const McOptions& options, std::uint64_t seed,
                  std::span<const Dims> dims, Dims baseline) {
  McTable table;
  table.delta = delta;
  table.dims.assign(dims.begin(), dims.end());
  table.fdr = options.fdr;
  for (PsiKind psi : {PsiKind::identity, PsiKind::decreasing}) {
    TableBlock block;
    block.psi = psi;
    auto make = [&](Dims d) {
      DgpConfig c;
      c.n = d.n;
      c.t = d.t;
      c.s = d.s;
      c.delta = delta;
      c.psi = psi;
      c.seed = seed;
      return c;
    };
    block.baseline = run_mc(make(baseline), options);
    for (Dims d : dims) {
      if (d == baseline) {
        block.columns.push_back(block.baseline);
      } else {
        block.columns.push_back(run_mc(make(d), options));
      }
      block.cells.push_back(ratios(block.columns.back(), block.baseline));
    }
    table.blocks.push_back(std::move(block));
  }
  return table;
}

namespace {

void write_table_impl(std::ostream& out, const McTable& table, bool se) {
  std::vector<std::string> header{"delta", "psi", "fdr"};
  for (Dims d : table.dims) {
    header.push_back("MSER_" + dims_label(d) + (se ? "_se" : ""));
    header.push_back("MSFER_" + dims_label(d) + (se ? "_se" : ""));
  }
  csv::write_row(out, header);
  for (const auto& block : table.blocks) {
    for (std::size_t f = 0; f < table.fdr.size(); ++f) {
      std::vector<std::string> row{csv::format_double(table.delta),
                                   std::string(to_string(block.psi)),
                                   csv::format_double(table.fdr[f])};
      for (const auto& col : block.cells) {
        row.push_back(csv::format_double(se ? col[f].mser_se : col[f].mser));
        row.push_back(csv::format_double(se ? col[f].msfer_se : col[f].msfer));
      }
      csv::write_row(out, row);
    }
  }
}

bool tolerant_below(double r, double se, double k) { return r < 1.0 + k * se; }
bool tolerant_above(double r, double se, double k) { return r > 1.0 - k * se; }

}  // namespace

void write_table_csv(std::ostream& out, const McTable& table) { write_table_impl(out, table, false); }

void write_table_se_csv(std::ostream& out, const McTable& table) {
  write_table_impl(out, table, true);
}

std::string format_table(const McTable& table) {
  std::ostringstream os;
  os << "delta = " << fmt("%g", table.delta) << "\n";
  os << "psi         fdr   ";
  for (Dims d : table.dims) {
    char buf[64];
    std::snprintf(buf, sizeof buf, " %-21s", ("(" + std::to_string(d.n) + "," + std::to_string(d.t) +
                                              "," + std::to_string(d.s) + ")")
                                                 .c_str());
    os << buf;
  }
  os << "\n";
  for (const auto& block : table.blocks) {
    for (std::size_t f = 0; f < table.fdr.size(); ++f) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%-10s %5.1f%%", std::string(to_string(block.psi)).c_str(),
                    100.0 * table.fdr[f]);
      os << buf;
      for (const auto& col : block.cells) {
        std::snprintf(buf, sizeof buf, "   %.4f  %.4f     ", col[f].mser, col[f].msfer);
        os << buf;
      }
      os << "\n";
    }
  }
  return os.str();
}

bool ScalingReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

ScalingReport directional_checks(std::span<const Dims> dims,
                                 const std::vector<std::vector<RatioCell>>& cells, double k) {
  if (dims.size() != cells.size()) throw ConfigError("directional_checks: size mismatch");
  ScalingReport rep;
  rep.dims.assign(dims.begin(), dims.end());
  rep.cells = cells;
  if (dims.empty()) return rep;
  const Dims b = dims[0];
  for (std::size_t i = 1; i < dims.size(); ++i) {
    const Dims c = dims[i];
    const auto& cc = cells[i];
    if (c.t > b.t && c.n >= b.n && c.s == b.s) {
      DirectionalCheck chk{"t_growth " + dims_label(c), "", true};
      for (std::size_t f = 0; f < cc.size(); ++f) {
        if (!tolerant_below(cc[f].mser, cc[f].mser_se, k) ||
            !tolerant_below(cc[f].msfer, cc[f].msfer_se, k)) {
          chk.passed = false;
          chk.detail += "row " + std::to_string(f) + ": MSER " + fmt("%.4f", cc[f].mser) +
                        " MSFER " + fmt("%.4f", cc[f].msfer) + "; ";
        }
      }
      rep.checks.push_back(chk);
    }
    if (c.t == b.t && c.n > b.n && c.s > b.s) {
      DirectionalCheck chk{"dimension_growth " + dims_label(c), "", true};
      std::size_t below = 0;
      for (std::size_t f = 0; f < cc.size(); ++f) {
        if (tolerant_below(cc[f].mser, cc[f].mser_se, k)) ++below;
        if (!tolerant_above(cc[f].msfer, cc[f].msfer_se, k)) {
          chk.passed = false;
          chk.detail += "row " + std::to_string(f) + ": MSFER " + fmt("%.4f", cc[f].msfer) +
                        " (se " + fmt("%.4f", cc[f].msfer_se) + "); ";
        }
      }
      if (2 * below <= cc.size()) {
        chk.passed = false;
        chk.detail += "MSER below one in only " + std::to_string(below) + " of " +
                      std::to_string(cc.size()) + " rows; ";
      }
      rep.checks.push_back(chk);
    }
    for (std::size_t j = 1; j < dims.size(); ++j) {
      const Dims lo = dims[j];
      if (j == i || lo.n != c.n || lo.t != c.t || !(c.s > lo.s)) continue;
      DirectionalCheck chk{"sparsity " + dims_label(c) + " vs " + dims_label(lo), "", true};
      const auto& lc = cells[j];
      for (std::size_t f = 0; f < cc.size(); ++f) {
        const double se_in = std::hypot(cc[f].mser_se, lc[f].mser_se);
        const double se_out = std::hypot(cc[f].msfer_se, lc[f].msfer_se);
        if (!(cc[f].mser - lc[f].mser > -k * se_in) || !(cc[f].msfer - lc[f].msfer > -k * se_out)) {
          chk.passed = false;
          chk.detail += "row " + std::to_string(f) + "; ";
        }
      }
      rep.checks.push_back(chk);
    }
  }
  return rep;
}

ScalingReport verify_error_scaling(const DgpConfig& base, std::span<const Dims> sweep,
                                   const McOptions& options, double k) {
  if (!(k >= 0.0)) throw ConfigError("verify_error_scaling: k must be nonnegative");
  std::vector<McReport> reports;
  std::vector<std::vector<RatioCell>> cells;
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    DgpConfig c = base;
    c.n = sweep[i].n;
    c.t = sweep[i].t;
    c.s = sweep[i].s;
    if (i > 0 && sweep[i] == sweep[0]) {
      reports.push_back(reports.front());
    } else {
      reports.push_back(run_mc(c, options));
    }
  }
  for (const auto& r : reports) cells.push_back(ratios(r, reports.front()));
  return directional_checks(sweep, cells, k);
}

ScalingReport table_directional_checks(const McTable& table, double k) {
  ScalingReport all;
  for (const auto& block : table.blocks) {
    std::vector<Dims> dims{kTableBaseline};
    std::vector<std::vector<RatioCell>> cells{ratios(block.baseline, block.baseline)};
    for (std::size_t i = 0; i < table.dims.size(); ++i) {
      dims.push_back(table.dims[i]);
      cells.push_back(block.cells[i]);
    }
    ScalingReport r = directional_checks(dims, cells, k);
    for (auto& c : r.checks) {
      c.name = "delta " + fmt("%g", table.delta) + " psi " + std::string(to_string(block.psi)) +
               ": " + c.name;
      all.checks.push_back(std::move(c));
    }
  }
  return all;
}

bool GcvOosReport::regret_nonnegative() const {
  for (const auto& r : rows) {
    for (double v : r.regret) {
      if (!(v >= 0.0)) return false;
    }
  }
  return true;
}

bool GcvOosReport::regret_shrinks() const {
  return rows.size() >= 2 && rows.back().median_regret < rows.front().median_regret;
}

bool GcvOosReport::gap_shrinks() const {
  return rows.size() >= 2 && rows.back().median_gap < rows.front().median_gap;
}

GcvOosReport verify_gcv_oos(const GcvOosConfig& cfg) {
  if (cfg.replications < 1) throw ConfigError("verify_gcv_oos: replications must be positive");
  if (cfg.alphas.empty()) throw ConfigError("verify_gcv_oos: empty alpha grid");
  const ScreenConfig screen_cfg = ScreenConfig::from_tau(cfg.tau);
  const Matrix sigma = population_second_moment(cfg.dgp);
  GcvOosReport report;
  for (int t : cfg.t_values) {
    DgpConfig dgp = cfg.dgp;
    dgp.t = t;
    dgp.validate();
    GcvOosRow row;
    row.t = t;
    row.regret.assign(static_cast<std::size_t>(cfg.replications), 0.0);
    row.gap.assign(static_cast<std::size_t>(cfg.replications), 0.0);
    run_replications(static_cast<std::size_t>(cfg.replications), cfg.threads, [&](std::size_t rep) {
      const DgpSample smp = simulate_dgp(dgp, t, rep);
      const Matrix off = officials_of(smp.z);
      const ScreenResult sr = screen(smp.y, off, smp.x, screen_cfg);
      const Matrix design = [&] {
        Matrix d(t, 3 + static_cast<Eigen::Index>(sr.selected.size()));
        d.leftCols(3) = off;
        for (std::size_t c = 0; c < sr.selected.size(); ++c) {
          d.col(3 + static_cast<Eigen::Index>(c)) = smp.x.col(static_cast<Eigen::Index>(sr.selected[c]));
        }
        return d;
      }();
      const RidgePath path(design, smp.y, cfg.ridge);
      const Vector truth = true_coefficients(smp);
      std::size_t hat = 0;
      double best_gcv = 0.0;
      double best_rho = 0.0;
      double rho_hat = 0.0;
      for (std::size_t a = 0; a < cfg.alphas.size(); ++a) {
        const Vector coef = path.coefficients(cfg.alphas[a]);
        Vector full = Vector::Zero(truth.size());
        full.head(3) = coef.head(3);
        for (std::size_t c = 0; c < sr.selected.size(); ++c) {
          full(3 + static_cast<Eigen::Index>(sr.selected[c])) = coef(3 + static_cast<Eigen::Index>(c));
        }
        const double rho = conditional_mspe(full, truth, 1.0, sigma);
        const double g = path.gcv(cfg.alphas[a]);
        if (a == 0 || g <= best_gcv) {
          best_gcv = g;
          hat = a;
          rho_hat = rho;
        }
        if (a == 0 || rho < best_rho) best_rho = rho;
      }
      (void)hat;
      row.regret[rep] = rho_hat - best_rho;
      row.gap[rep] = std::abs(best_gcv - rho_hat);
    });
    row.median_regret = median(row.regret);
    row.median_gap = median(row.gap);
    report.rows.push_back(std::move(row));
  }
  return report;
}

bool SureScreeningReport::monotone() const {
  for (std::size_t i = 1; i < frequency.size(); ++i) {
    if (frequency[i] < frequency[i - 1]) return false;
  }
  return true;
}

SureScreeningReport sure_screening_frequency(const SureScreeningConfig& cfg) {
  if (cfg.replications < 1) throw ConfigError("sure screening: replications must be positive");
  const ScreenConfig screen_cfg = ScreenConfig::from_tau(cfg.tau);
  SureScreeningReport report;
  for (int t : cfg.t_values) {
    DgpConfig dgp = cfg.dgp;
    dgp.t = t;
    dgp.validate();
    std::vector<double> hit(static_cast<std::size_t>(cfg.replications), 0.0);
    std::vector<double> count(static_cast<std::size_t>(cfg.replications), 0.0);
    run_replications(hit.size(), cfg.threads, [&](std::size_t rep) {
      const DgpSample smp = simulate_dgp(dgp, t, rep);
      const ScreenResult sr = screen(smp.y, officials_of(smp.z), smp.x, screen_cfg);
      std::size_t found = 0;
      for (std::size_t j : sr.selected) {
        if (static_cast<int>(j) < dgp.s) ++found;
      }
      hit[rep] = found == static_cast<std::size_t>(dgp.s) ? 1.0 : 0.0;
      count[rep] = static_cast<double>(sr.selected.size());
    });
    report.t_values.push_back(t);
    report.frequency.push_back(mean_and_se(hit).mean);
    report.mean_selected.push_back(mean_and_se(count).mean);
  }
  return report;
}

}  // namespace ramsel
