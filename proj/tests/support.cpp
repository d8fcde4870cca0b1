#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "ramsel/mc.hpp"
#include "ramsel/ridge.hpp"
#include "ramsel/screen.hpp"
#include "ramsel/synthetic.hpp"

namespace ramsel::testing {
namespace {

double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

double rel_diff(const Vector& a, const Vector& b) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), 1e-300});
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::exp(std::uniform_real_distribution<double>(std::log(lo), std::log(hi))(rng));
}

struct ScreenProblem {
  Vector y;
  Matrix officials;
  Matrix candidates;
};

ScreenProblem random_screen_problem(std::mt19937_64& rng) {
  const int t = uniform_int(rng, 30, 120);
  const int n1 = uniform_int(rng, 1, 4);
  const int ng = uniform_int(rng, 5, 60);
  ScreenProblem p;
  p.officials = random_matrix(rng, t, n1);
  p.officials.col(0).setOnes();
  p.candidates = random_matrix(rng, t, ng);
  p.y = random_vector(rng, t);
  std::normal_distribution<double> normal;
  for (int j = 0; j < std::min(ng, 4); ++j) p.y += 0.4 * normal(rng) * p.candidates.col(j);
  return p;
}

}  // namespace

Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  }
  return m;
}

Vector random_vector(std::mt19937_64& rng, Eigen::Index n) {
  return random_matrix(rng, n, 1).col(0);
}

Vector dense_ridge_oracle(const Matrix& x, const Vector& y, double alpha) {
  const double t = static_cast<double>(x.rows());
  Matrix a = x.transpose() * x;
  a.diagonal().array() += t * alpha;
  return a.fullPivLu().solve(x.transpose() * y);
}

DenseGcv dense_gcv_oracle(const Matrix& x, const Vector& y, double alpha) {
  const double t = static_cast<double>(x.rows());
  DenseGcv out;
  if (x.cols() >= x.rows()) {
    // I - H = T alpha (XX' + T alpha I)^{-1}, free of cancellation near interpolation.
    Matrix k = x * x.transpose();
    k.diagonal().array() += t * alpha;
    const Matrix m = t * alpha * k.fullPivLu().inverse();
    out.rss = (m * y).squaredNorm();
    out.trace = t - m.trace();
  } else {
    Matrix a = x.transpose() * x / t;
    a.diagonal().array() += alpha;
    const Matrix h = x * a.fullPivLu().inverse() * x.transpose() / t;
    out.rss = (y - h * y).squaredNorm();
    out.trace = h.trace();
  }
  const double d = 1.0 - out.trace / t;
  out.gcv = out.rss / (t * d * d);
  return out;
}

double ols_tstat_oracle(const Vector& y, const Matrix& officials, const Vector& candidate) {
  const Eigen::Index k = officials.cols() + 1;
  Matrix w(y.size(), k);
  w << officials, candidate;
  const Matrix inv = (w.transpose() * w).fullPivLu().inverse();
  const Vector b = inv * (w.transpose() * y);
  const double rss = (y - w * b).squaredNorm();
  const double s2 = rss / static_cast<double>(y.size() - k);
  return b(k - 1) / std::sqrt(s2 * inv(k - 1, k - 1));
}

double normal_quantile_oracle(double p) {
  double lo = -40.0;
  double hi = 40.0;
  const bool upper = p > 0.5;
  const double tail = upper ? 1.0 - p : p;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (upper) {
      (0.5 * std::erfc(mid / std::sqrt(2.0)) > tail ? lo : hi) = mid;
    } else {
      (0.5 * std::erfc(-mid / std::sqrt(2.0)) < tail ? lo : hi) = mid;
    }
  }
  return 0.5 * (lo + hi);
}

Vector standardized_ridge_oracle(const Matrix& x, const Vector& y, double alpha) {
  const Eigen::Index t = x.rows();
  const Eigen::Index p = x.cols();
  Vector mean(p);
  Vector sd(p);
  Matrix w(t, p);
  w.col(0).setOnes();
  for (Eigen::Index j = 1; j < p; ++j) {
    mean(j) = x.col(j).mean();
    sd(j) = std::sqrt((x.col(j).array() - mean(j)).square().sum() / static_cast<double>(t));
    w.col(j) = (x.col(j).array() - mean(j)) / sd(j);
  }
  const Vector b = dense_ridge_oracle(w, y, alpha);
  Vector beta(p);
  beta(0) = b(0);
  for (Eigen::Index j = 1; j < p; ++j) {
    beta(j) = b(j) / sd(j);
    beta(0) -= beta(j) * mean(j);
  }
  return beta;
}

Panel small_panel(std::uint64_t seed, int quarters, int alt) {
  SyntheticPanelConfig cfg;
  cfg.first = Quarter(2000, 1);
  cfg.last = cfg.first + (quarters - 1);
  cfg.alt_informative = std::min(alt, 2);
  cfg.alt_noise = std::max(0, alt - 2);
  cfg.seed = seed;
  return make_synthetic_panel(cfg);
}

CheckResult check_ridge_oracle(int problems, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  CheckResult res;
  double worst = 0.0;
  for (int i = 0; i < problems; ++i) {
    const int t = uniform_int(rng, 5, 100);
    const int p = uniform_int(rng, 1, 150);
    const double alpha = log_uniform(rng, 1e-4, 10.0);
    const Matrix x = random_matrix(rng, t, p);
    const Vector y = random_vector(rng, t);
    const Vector oracle = dense_ridge_oracle(x, y, alpha);
    const double e1 = rel_diff(ridge_solve(x, y, alpha), oracle);
    const RidgePath path(x, y, {.standardize = false, .penalize_intercept = true});
    const double e2 = rel_diff(path.coefficients(alpha), oracle);
    worst = std::max({worst, e1, e2});
    ++res.cases;
    if (e1 > 1e-10 || e2 > 1e-10) {
      std::ostringstream os;
      os << "problem " << i << " (T=" << t << ", p=" << p << ", alpha=" << alpha
         << "): relative error " << std::max(e1, e2);
      res.fail(os.str());
    }
  }
  if (res.passed) {
    std::ostringstream os;
    os << "max relative error " << worst;
    res.detail = os.str();
  }
  return res;
}

CheckResult check_gcv_oracle(int problems, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  CheckResult res;
  double worst = 0.0;
  for (int i = 0; i < problems; ++i) {
    const int t = uniform_int(rng, 5, 100);
    const int p = uniform_int(rng, 1, 150);
    const double alpha = log_uniform(rng, 1e-4, 10.0);
    const Matrix x = random_matrix(rng, t, p);
    const Vector y = random_vector(rng, t);
    const DenseGcv oracle = dense_gcv_oracle(x, y, alpha);
    const double e = rel_diff(gcv(x, y, alpha), oracle.gcv);
    worst = std::max(worst, e);
    ++res.cases;
    if (e > 1e-10) {
      std::ostringstream os;
      os << "problem " << i << " (T=" << t << ", p=" << p << ", alpha=" << alpha
         << "): relative error " << e;
      res.fail(os.str());
    }
  }
  if (res.passed) {
    std::ostringstream os;
    os << "max relative error " << worst;
    res.detail = os.str();
  }
  return res;
}

CheckResult check_tau_monotonicity(int cases, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.001, 0.5);
  CheckResult res;
  for (int i = 0; i < cases; ++i) {
    const ScreenProblem p = random_screen_problem(rng);
    double t1 = unif(rng);
    double t2 = unif(rng);
    if (t1 > t2) std::swap(t1, t2);
    const ScreenResult a = screen(p.y, p.officials, p.candidates, ScreenConfig::from_tau(t1));
    const ScreenResult b = screen(p.y, p.officials, p.candidates, ScreenConfig::from_tau(t2));
    ++res.cases;
    if (!std::includes(b.selected.begin(), b.selected.end(), a.selected.begin(), a.selected.end())) {
      res.fail("case " + std::to_string(i) + ": selection at smaller tau is not a subset");
    }
  }
  return res;
}

CheckResult check_scale_invariance(int cases, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> shift(-5.0, 5.0);
  std::bernoulli_distribution flip(0.5);
  auto scale = [&] { return (flip(rng) ? -1.0 : 1.0) * log_uniform(rng, 0.01, 100.0); };
  CheckResult res;
  for (int i = 0; i < cases; ++i) {
    const ScreenProblem p = random_screen_problem(rng);
    const ScreenConfig cfg = ScreenConfig::from_tau(0.10);
    const ScreenResult base = screen(p.y, p.officials, p.candidates, cfg);
    ScreenProblem q = p;
    q.y = scale() * p.y.array() + shift(rng);
    for (Eigen::Index j = 1; j < q.officials.cols(); ++j) {
      q.officials.col(j) = scale() * p.officials.col(j).array() + shift(rng);
    }
    for (Eigen::Index j = 0; j < q.candidates.cols(); ++j) {
      q.candidates.col(j) = scale() * p.candidates.col(j).array() + shift(rng);
    }
    const ScreenResult moved = screen(q.y, q.officials, q.candidates, cfg);
    ++res.cases;
    if (moved.selected != base.selected) {
      res.fail("case " + std::to_string(i) + ": selection changed under rescaling");
      continue;
    }
    for (std::size_t j = 0; j < base.tstats.size(); ++j) {
      if (rel_diff(std::abs(base.tstats[j]), std::abs(moved.tstats[j])) > 1e-8) {
        res.fail("case " + std::to_string(i) + ": |t| changed under rescaling");
        break;
      }
    }
  }
  return res;
}

CheckResult check_nested_information(int cases, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  CheckResult res;
  const Panel panel = small_panel(seed, 20, 4);
  const auto quarters = panel.quarters();
  for (int i = 0; i < cases; ++i) {
    ReleaseCalendar cal;
    for (const auto& s : panel.predictors) {
      std::vector<ReleaseEntry> e;
      if (s.frequency == Frequency::weekly) {
        const int lag = uniform_int(rng, 0, 2);
        for (int k = 1; k <= kWeeksPerQuarter; ++k) e.push_back({k, std::min(kWeeksPerQuarter, k + lag)});
      } else {
        const int released = uniform_int(rng, 0, 3);
        std::vector<int> weeks;
        for (int k = 0; k < released; ++k) weeks.push_back(uniform_int(rng, 1, kWeeksPerQuarter));
        std::sort(weeks.begin(), weeks.end());
        for (int k = 0; k < released; ++k) e.push_back({k + 1, weeks[static_cast<std::size_t>(k)]});
      }
      cal.set(s.id, e);
    }
    cal.validate(panel);
    int w1 = uniform_int(rng, 1, kWeeksPerQuarter);
    int w2 = uniform_int(rng, 1, kWeeksPerQuarter);
    if (w1 > w2) std::swap(w1, w2);
    const WeekDesign d1 = build_week_design(panel, cal, w1, quarters);
    const WeekDesign d2 = build_week_design(panel, cal, w2, quarters);
    ++res.cases;
    for (std::size_t j = 0; j < d1.columns.size(); ++j) {
      if (d1.active_mask[j] && !d2.active_mask[j]) {
        res.fail("case " + std::to_string(i) + ": column active at week " + std::to_string(w1) +
                 " but not at week " + std::to_string(w2));
      }
    }
    for (const auto& s : panel.predictors) {
      const auto a = cal.released(s.id, w1);
      const auto b = cal.released(s.id, w2);
      if (!std::includes(b.begin(), b.end(), a.begin(), a.end())) {
        res.fail("case " + std::to_string(i) + ": released set of " + s.id + " not nested");
      }
      // Week-w value of a weekly series is the mean of its released weeks.
      if (s.frequency == Frequency::weekly && !a.empty()) {
        const std::size_t row = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(quarters.size()) - 1));
        double sum = 0.0;
        for (int k : a) sum += *s.at(period_index(s.frequency, quarters[row], k));
        const auto col = static_cast<Eigen::Index>(
            std::find_if(d1.columns.begin(), d1.columns.end(), [&](const auto& c) { return c.series_id == s.id; }) -
            d1.columns.begin());
        if (rel_diff(d1.x(static_cast<Eigen::Index>(row), col), sum / static_cast<double>(a.size())) > 1e-14) {
          res.fail("case " + std::to_string(i) + ": weekly aggregate of " + s.id + " uses unreleased weeks");
        }
      }
    }
  }
  return res;
}

CheckResult check_no_lookahead(int cases, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  constexpr double kSentinel = 1e9;
  const Variant variants[] = {Variant::full_no_screen, Variant::ridge_after_selection, Variant::alt_only_screened,
                              Variant::alt_only_no_screen, Variant::officials_only};
  CheckResult res;
  for (int i = 0; i < cases; ++i) {
    const Panel panel = small_panel(seed + static_cast<std::uint64_t>(i), 36, 5);
    const ReleaseCalendar cal = ReleaseCalendar::preset(CalendarPreset::ea, panel);
    NowcastConfig cfg;
    cfg.variant = variants[uniform_int(rng, 0, 4)];
    cfg.training_gap = uniform_int(rng, 1, 2);
    cfg.lagged_target = uniform_int(rng, 0, 1) == 1;
    cfg.alphas = AlphaGrid{1e-4, 1e2, 20}.points();
    const Quarter q = panel.first + uniform_int(rng, 20, 35);
    const int w = uniform_int(rng, 1, kWeeksPerQuarter);
    cfg.oos_start = q;
    cfg.oos_end = q;
    cfg.weeks = {w};
    const double base = nowcast_recursive(panel, cal, cfg).nowcasts(0, w - 1);

    Panel poisoned = panel;
    for (auto& s : poisoned.predictors) {
      const auto released = cal.released(s.id, w);
      for (auto& o : s.values) {
        const Quarter t = quarter_of(s.frequency, o.period);
        const int sub = sub_period_of(s.frequency, o.period);
        const bool visible = t <= q && std::find(released.begin(), released.end(), sub) != released.end();
        if (!visible) o.value = kSentinel;
      }
    }
    for (auto& o : poisoned.target.values) {
      if (Quarter::from_index(o.period) > q - cfg.training_gap) o.value = kSentinel;
    }
    const double after = nowcast_recursive(poisoned, cal, cfg).nowcasts(0, w - 1);
    ++res.cases;
    if (!(after == base)) {
      std::ostringstream os;
      os << "case " << i << " (" << to_string(cfg.variant) << ", " << q.label() << ", week " << w
         << "): nowcast moved from " << base << " to " << after;
      res.fail(os.str());
      continue;
    }
    // The last admissible target must matter, otherwise the check is vacuous.
    Panel touched = panel;
    for (auto& o : touched.target.values) {
      if (Quarter::from_index(o.period) == q - cfg.training_gap) o.value += 10.0;
    }
    if (nowcast_recursive(touched, cal, cfg).nowcasts(0, w - 1) == base) {
      res.fail("case " + std::to_string(i) + ": visible data had no effect");
    }
  }
  return res;
}

CheckResult check_rerun_determinism(int cases, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  CheckResult res;
  for (int i = 0; i < cases; ++i) {
    ++res.cases;
    if (i % 2 == 0) {
      DgpConfig cfg;
      cfg.n = uniform_int(rng, 10, 40);
      cfg.s = uniform_int(rng, 0, cfg.n);
      cfg.t = uniform_int(rng, 30, 60);
      cfg.delta = uniform_int(rng, 0, 1) ? 0.2 : 0.8;
      cfg.psi = uniform_int(rng, 0, 1) ? PsiKind::identity : PsiKind::decreasing;
      cfg.seed = rng();
      McOptions opt;
      opt.replications = 4;
      opt.alphas = AlphaGrid{1e-4, 1e2, 15}.points();
      opt.threads = 1;
      const McReport a = run_mc(cfg, opt);
      opt.threads = 3;
      const McReport b = run_mc(cfg, opt);
      const McReport c = run_mc(cfg, opt);
      if (a.in_sample_mse != b.in_sample_mse || a.oos_mse != b.oos_mse || b.oos_mse != c.oos_mse ||
          b.in_sample_mse != c.in_sample_mse) {
        res.fail("case " + std::to_string(i) + ": Monte Carlo rerun differs");
      }
    } else {
      const Panel panel = small_panel(rng(), 30, 4);
      const ReleaseCalendar cal = ReleaseCalendar::preset(CalendarPreset::ea, panel);
      NowcastConfig cfg;
      cfg.oos_start = panel.first + 24;
      cfg.alphas = AlphaGrid{1e-4, 1e2, 15}.points();
      cfg.weeks = {uniform_int(rng, 1, 13)};
      cfg.threads = 1;
      const NowcastRun a = nowcast_recursive(panel, cal, cfg);
      cfg.threads = 3;
      const NowcastRun b = nowcast_recursive(panel, cal, cfg);
      if (!(a.nowcasts.array() == b.nowcasts.array() || (a.nowcasts.array().isNaN() && b.nowcasts.array().isNaN()))
               .all()) {
        res.fail("case " + std::to_string(i) + ": nowcast rerun differs");
      }
    }
  }
  return res;
}

CheckResult check_rmsfe_profile(const Panel& panel) {
  const ReleaseCalendar cal = ReleaseCalendar::preset(CalendarPreset::ea, panel);
  NowcastConfig cfg;
  cfg.variant = Variant::ridge_after_selection;
  cfg.oos_start = panel.first + (cfg.min_training_quarters + cfg.training_gap - 1);
  const NowcastRun run = nowcast_recursive(panel, cal, cfg);
  CheckResult res;
  std::ostringstream os;
  for (int w = 1; w <= kWeeksPerQuarter; ++w) {
    os << (w > 1 ? " " : "") << run.per_week_rmsfe(w - 1);
    ++res.cases;
    if (w > 1 && run.per_week_rmsfe(w - 1) > run.per_week_rmsfe(w - 2)) {
      res.passed = false;
    }
  }
  res.detail = "RMSFE by week: " + os.str();
  return res;
}

CheckResult check_officials_only_manual(const Panel& panel, Quarter q, int week) {
  constexpr int gap = 2;
  const std::vector<double> alphas = AlphaGrid{}.points();
  // Euro-area timing: surveys month k in week 5, 9, 13; hard data month 1 in week 11.
  auto released_months = [&](const Series& s) {
    std::vector<int> months;
    const int weeks[] = {5, 9, 13};
    if (s.group == Group::soft) {
      for (int k = 0; k < 3; ++k) {
        if (weeks[k] <= week) months.push_back(k + 1);
      }
    } else if (week >= 11) {
      months.push_back(1);
    }
    return months;
  };
  std::vector<const Series*> used;
  for (const auto& s : panel.predictors) {
    if ((s.group == Group::soft || s.group == Group::hard) && !released_months(s).empty()) used.push_back(&s);
  }
  auto row_of = [&](Quarter t) {
    Vector r(static_cast<Eigen::Index>(used.size()) + 1);
    r(0) = 1.0;
    for (std::size_t j = 0; j < used.size(); ++j) {
      double sum = 0.0;
      const auto months = released_months(*used[j]);
      for (int m : months) sum += *used[j]->at(period_index(Frequency::monthly, t, m));
      r(static_cast<Eigen::Index>(j) + 1) = sum / static_cast<double>(months.size());
    }
    return r;
  };
  std::vector<Quarter> train;
  for (Quarter t = panel.first; t <= q - gap; t = t + 1) {
    if (panel.target.at(t.index())) train.push_back(t);
  }
  Matrix x(static_cast<Eigen::Index>(train.size()), static_cast<Eigen::Index>(used.size()) + 1);
  Vector y(x.rows());
  for (std::size_t r = 0; r < train.size(); ++r) {
    x.row(static_cast<Eigen::Index>(r)) = row_of(train[r]).transpose();
    y(static_cast<Eigen::Index>(r)) = *panel.target.at(train[r].index());
  }
  // Standardized design for the GCV search.
  Matrix w = x;
  for (Eigen::Index j = 1; j < x.cols(); ++j) {
    const double m = x.col(j).mean();
    const double sd = std::sqrt((x.col(j).array() - m).square().sum() / static_cast<double>(x.rows()));
    w.col(j) = (x.col(j).array() - m) / sd;
  }
  double best_alpha = alphas.front();
  double best = std::numeric_limits<double>::infinity();
  for (double a : alphas) {
    const double g = dense_gcv_oracle(w, y, a).gcv;
    if (g <= best) {
      best = g;
      best_alpha = a;
    }
  }
  const Vector beta = standardized_ridge_oracle(x, y, best_alpha);
  const double manual = row_of(q).dot(beta);

  NowcastConfig cfg;
  cfg.variant = Variant::officials_only;
  cfg.training_gap = gap;
  cfg.alphas = alphas;
  cfg.oos_start = q;
  cfg.oos_end = q;
  cfg.weeks = {week};
  const NowcastRun run = nowcast_recursive(panel, ReleaseCalendar::preset(CalendarPreset::ea, panel), cfg);
  const double pipeline = run.nowcasts(0, week - 1);
  CheckResult res;
  res.cases = 1;
  std::ostringstream os;
  os.precision(17);
  os << "pipeline " << pipeline << " manual " << manual << " (alpha " << best_alpha << " vs "
     << run.alphas(0, week - 1) << ")";
  res.detail = os.str();
  res.passed = std::abs(pipeline - manual) <= 1e-10 * std::max(1.0, std::abs(manual));
  return res;
}

}  // namespace ramsel::testing
