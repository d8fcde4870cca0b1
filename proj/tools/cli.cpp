#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ramsel/bridge.hpp"
#include "ramsel/csv.hpp"
#include "ramsel/dataset.hpp"
#include "ramsel/error.hpp"
#include "ramsel/log.hpp"
#include "ramsel/mc.hpp"
#include "ramsel/ridge.hpp"
#include "ramsel/screen.hpp"

namespace ramsel::cli {
namespace {

namespace fs = std::filesystem;

constexpr const char* kVersion = "0.1.0";
constexpr const char* kCalendarPresetVersion = "1";

class Manifest {
public:
  void add(std::string key, std::string value) { entries_.emplace_back(std::move(key), std::move(value)); }
  void add_options(const CLI::App& app) {
    for (const CLI::Option* opt : app.get_options()) {
      const std::string name = opt->get_single_name();
      if (name.empty() || name == "help" || name == "config") continue;
      std::string value;
      if (opt->count() > 0) {
        for (const auto& r : opt->results()) value += (value.empty() ? "" : ",") + r;
      } else {
        value = opt->get_default_str();
      }
      add(app.get_name() + "." + name, value);
    }
  }
  void write(const fs::path& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    for (const auto& [k, v] : entries_) out << k << '=' << v << '\n';
  }

private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

struct Common {
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
  unsigned threads = 1;
  std::string log_level = "warn";

  std::uint64_t materialize_seed() const {
    if (seed_opt != nullptr && seed_opt->count() > 0) return seed;
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }
  fs::path out_path(const std::string& name) const { return fs::path(out_dir) / name; }
};

struct GridOpts {
  double lo = 1e-6;
  double hi = 1e2;
  int count = 100;
  std::string spacing = "log";
  bool no_standardize = false;
  bool unpenalized_intercept = false;

  std::vector<double> points() const {
    if (spacing != "log" && spacing != "linear") {
      throw ConfigError("alpha spacing must be log or linear");
    }
    return AlphaGrid{lo, hi, count, spacing == "log" ? GridSpacing::log : GridSpacing::linear}.points();
  }
  RidgeOptions ridge() const { return {.standardize = !no_standardize, .penalize_intercept = !unpenalized_intercept}; }
};

void add_grid_options(CLI::App* app, GridOpts& g) {
  app->add_option("--alpha-lo", g.lo, "Smallest penalty in the GCV grid");
  app->add_option("--alpha-hi", g.hi, "Largest penalty in the GCV grid");
  app->add_option("--alpha-count", g.count, "Number of grid points");
  app->add_option("--alpha-spacing", g.spacing, "Grid spacing: log or linear");
  app->add_flag("--no-standardize", g.no_standardize, "Fit on raw columns instead of standardized ones");
  app->add_flag("--unpenalized-intercept", g.unpenalized_intercept, "Exclude the intercept from the penalty");
}

struct PanelOpts {
  std::string data;
  std::string metadata;
  std::string calendar = "ea";
  std::string calendar_file;
  std::string first;
  std::string last;
};

void add_panel_options(CLI::App* app, PanelOpts& p) {
  app->add_option("--data", p.data, "Long-format panel CSV (date, series_id, value)")->required();
  app->add_option("--metadata", p.metadata, "Series metadata CSV")->required();
  app->add_option("--calendar", p.calendar, "Release calendar: ea, us, de or metadata");
  app->add_option("--calendar-file", p.calendar_file, "CSV overriding release weeks (series_id, sub_period, week)");
  app->add_option("--first", p.first, "First quarter of the panel, e.g. 2005Q1");
  app->add_option("--last", p.last, "Last quarter of the panel");
}

void require_file(const std::string& path, const char* what) {
  if (path.empty() || !fs::is_regular_file(path)) {
    throw ConfigError(std::string(what) + " file not found: '" + path + "'");
  }
}

Panel load(const PanelOpts& p) {
  require_file(p.data, "data");
  require_file(p.metadata, "metadata");
  PanelSchema schema;
  if (!p.first.empty()) schema.first = Quarter::parse(p.first);
  if (!p.last.empty()) schema.last = Quarter::parse(p.last);
  return load_panel(p.data, p.metadata, schema);
}

ReleaseCalendar load_calendar(const PanelOpts& p, const Panel& panel) {
  ReleaseCalendar cal = p.calendar == "metadata"
                            ? ReleaseCalendar::from_panel(panel)
                            : ReleaseCalendar::preset(parse_calendar_preset(p.calendar), panel);
  if (!p.calendar_file.empty()) {
    require_file(p.calendar_file, "calendar");
    cal.merge_csv(p.calendar_file);
    cal.validate(panel);
  }
  return cal;
}

Aggregation parse_aggregation(const std::string& s) {
  if (s == "mean" || s == "mean_to_date") return Aggregation::mean_to_date;
  if (s == "latest") return Aggregation::latest;
  throw ConfigError("aggregation must be mean or latest, got '" + s + "'");
}

ScreenConfig screen_config(double tau, const CLI::Option* lambda_opt, double lambda) {
  return lambda_opt != nullptr && lambda_opt->count() > 0 ? ScreenConfig::from_lambda(lambda)
                                                          : ScreenConfig::from_tau(tau);
}

void prepare_out_dir(const Common& c) {
  std::error_code ec;
  fs::create_directories(c.out_dir, ec);
  if (ec || !fs::is_directory(c.out_dir)) throw ConfigError("cannot create output directory '" + c.out_dir + "'");
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

/// Training rows of a week design (finite target, quarter <= end) and the
/// submatrix helpers used by screen and fit.
std::vector<Eigen::Index> training_rows(const WeekDesign& d, std::optional<Quarter> end) {
  std::vector<Eigen::Index> rows;
  for (std::size_t r = 0; r < d.quarters.size(); ++r) {
    if (end && d.quarters[r] > *end) continue;
    if (std::isfinite(d.y(static_cast<Eigen::Index>(r)))) rows.push_back(static_cast<Eigen::Index>(r));
  }
  return rows;
}

Matrix gather(const Matrix& x, const std::vector<Eigen::Index>& rows, const std::vector<std::size_t>& cols) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x(rows[i], static_cast<Eigen::Index>(cols[j]));
    }
  }
  return out;
}

Vector gather(const Vector& y, const std::vector<Eigen::Index>& rows) {
  Vector out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = y(rows[i]);
  return out;
}

std::vector<std::string> split_list(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const auto& item : items) {
    std::stringstream ss(item);
    std::string part;
    while (std::getline(ss, part, ',')) {
      part = csv::trim(part);
      if (!part.empty()) out.push_back(part);
    }
  }
  return out;
}

// ---------------------------------------------------------------- simulate

struct SimulateOpts {
  std::string preset = "paper-tables";
  int reps = 500;
  double oos_fraction = 0.5;
  std::vector<double> deltas{0.2, 0.8};
  std::vector<double> fdr{0.20, 0.10, 0.05, 0.025, 0.01, 0.005};
  bool fix_beta = false;
  int n = 150;
  int t = 100;
  int s = 105;
  double delta = 0.2;
  std::string psi = "identity";
  GridOpts grid;
};

int cmd_simulate(const CLI::App& app, const Common& c, const SimulateOpts& o, std::ostream& out,
                 std::ostream& err) {
  prepare_out_dir(c);
  const std::uint64_t seed = c.materialize_seed();
  McOptions mo;
  mo.replications = o.reps;
  mo.oos_fraction = o.oos_fraction;
  mo.fdr = o.fdr;
  mo.alphas = o.grid.points();
  mo.ridge = o.grid.ridge();
  mo.threads = c.threads;
  mo.validate();
  if (o.reps == 1) err << "warning: one replication; Monte Carlo standard errors are undefined\n";

  Manifest m;
  m.add("command", "simulate");
  m.add("version", kVersion);
  m.add("seed", std::to_string(seed));
  m.add_options(app);

  if (o.preset == "paper-tables") {
    if (o.fix_beta) throw ConfigError("--fix-beta applies to the single preset only");
    for (std::size_t k = 0; k < o.deltas.size(); ++k) {
      const McTable table = run_table(o.deltas[k], mo, seed);
      const std::string stem = "table" + std::to_string(k + 1);
      {
        auto f = open_out(c.out_path(stem + ".csv"));
        write_table_csv(f, table);
      }
      {
        auto f = open_out(c.out_path(stem + "_se.csv"));
        write_table_se_csv(f, table);
      }
      out << format_table(table) << '\n';
      const ScalingReport checks = table_directional_checks(table, 2.0);
      for (const auto& chk : checks.checks) {
        out << (chk.passed ? "holds  " : "fails  ") << chk.name << '\n';
        m.add("directional." + stem + "." + chk.name, chk.passed ? "holds" : "fails");
      }
      out << '\n';
      m.add("output." + stem, stem + ".csv");
      m.add("output." + stem + "_se", stem + "_se.csv");
    }
  } else if (o.preset == "single") {
    DgpConfig cfg;
    cfg.n = o.n;
    cfg.t = o.t;
    cfg.s = o.s;
    cfg.delta = o.delta;
    cfg.psi = parse_psi(o.psi);
    cfg.seed = seed;
    cfg.fix_beta = o.fix_beta;
    const McReport rep = run_mc(cfg, mo);
    auto f = open_out(c.out_path("mc_report.csv"));
    const std::vector<std::string> header{"fdr", "in_sample_mse", "in_sample_se", "oos_mse", "oos_se",
                                          "mean_selected"};
    csv::write_row(f, header);
    out << "fdr      in-sample MSE (se)        out-of-sample MSE (se)    selected\n";
    for (std::size_t i = 0; i < mo.fdr.size(); ++i) {
      const std::vector<std::string> row{csv::format_double(mo.fdr[i]),
                                         csv::format_double(rep.in_sample[i].mean),
                                         csv::format_double(rep.in_sample[i].se),
                                         csv::format_double(rep.oos[i].mean),
                                         csv::format_double(rep.oos[i].se),
                                         csv::format_double(rep.mean_selected[i])};
      csv::write_row(f, row);
      char buf[160];
      std::snprintf(buf, sizeof buf, "%5.1f%%   %10.4f (%.4f)      %10.4f (%.4f)      %7.2f\n",
                    100.0 * mo.fdr[i], rep.in_sample[i].mean, rep.in_sample[i].se, rep.oos[i].mean,
                    rep.oos[i].se, rep.mean_selected[i]);
      out << buf;
    }
    m.add("output.report", "mc_report.csv");
  } else {
    throw ConfigError("unknown simulate preset '" + o.preset + "' (expected paper-tables or single)");
  }
  m.write(c.out_path("manifest.txt"));
  return kExitOk;
}

// ------------------------------------------------------------------ screen

struct ScreenOpts {
  PanelOpts panel;
  int week = 13;
  double tau = 0.10;
  double lambda = 0.0;
  CLI::Option* lambda_opt = nullptr;
  std::string train_end;
};

int cmd_screen(const CLI::App& app, const Common& c, const ScreenOpts& o, std::ostream& out) {
  prepare_out_dir(c);
  const Panel panel = load(o.panel);
  const ReleaseCalendar cal = load_calendar(o.panel, panel);
  const auto quarters = panel.quarters();
  const WeekDesign d = build_week_design(panel, cal, o.week, quarters);
  std::optional<Quarter> end;
  if (!o.train_end.empty()) end = Quarter::parse(o.train_end);
  const auto rows = training_rows(d, end);
  const VariantColumns vc = variant_columns(d, Variant::ridge_after_selection);
  if (vc.candidates.empty()) throw ConfigError("no alternative series active in week " + std::to_string(o.week));
  const ScreenConfig cfg = screen_config(o.tau, o.lambda_opt, o.lambda);
  const ScreenResult sr =
      screen(gather(d.y, rows), gather(d.x, rows, vc.officials), gather(d.x, rows, vc.candidates), cfg, c.threads);

  auto f = open_out(c.out_path("screen.csv"));
  const std::vector<std::string> header{"series_id", "tstat", "selected", "skipped"};
  csv::write_row(f, header);
  out << "week " << o.week << ", " << rows.size() << " quarters, lambda = " << fmt("%.4f", sr.lambda) << '\n';
  for (std::size_t j = 0; j < vc.candidates.size(); ++j) {
    const bool sel = std::binary_search(sr.selected.begin(), sr.selected.end(), j);
    const bool skip = std::find(sr.skipped.begin(), sr.skipped.end(), j) != sr.skipped.end();
    const std::string& id = d.columns[vc.candidates[j]].series_id;
    const std::vector<std::string> row{id, csv::format_double(sr.tstats[j]), sel ? "1" : "0", skip ? "1" : "0"};
    csv::write_row(f, row);
    char buf[128];
    std::snprintf(buf, sizeof buf, "  %-24s t = %9.4f%s\n", id.c_str(), sr.tstats[j], sel ? "  selected" : "");
    out << buf;
  }
  out << sr.selected.size() << " of " << vc.candidates.size() << " candidates selected\n";

  Manifest m;
  m.add("command", "screen");
  m.add("version", kVersion);
  m.add("calendar_preset_version", kCalendarPresetVersion);
  m.add_options(app);
  m.add("output.screen", "screen.csv");
  m.write(c.out_path("manifest.txt"));
  return kExitOk;
}

// --------------------------------------------------------------------- fit

struct FitOpts {
  PanelOpts panel;
  int week = 13;
  std::string variant = "ridge_after_selection";
  double tau = 0.10;
  double lambda = 0.0;
  CLI::Option* lambda_opt = nullptr;
  std::string train_end;
  GridOpts grid;
};

int cmd_fit(const CLI::App& app, const Common& c, const FitOpts& o, std::ostream& out) {
  prepare_out_dir(c);
  const Panel panel = load(o.panel);
  const ReleaseCalendar cal = load_calendar(o.panel, panel);
  const Variant variant = parse_variant(o.variant);
  const auto quarters = panel.quarters();
  const WeekDesign d = build_week_design(panel, cal, o.week, quarters);
  std::optional<Quarter> end;
  if (!o.train_end.empty()) end = Quarter::parse(o.train_end);
  const auto rows = training_rows(d, end);
  const VariantColumns vc = variant_columns(d, variant);
  const auto alphas = o.grid.points();
  const Vector y = gather(d.y, rows);
  const Matrix officials = gather(d.x, rows, vc.officials);
  const Matrix candidates = gather(d.x, rows, vc.candidates);
  const RidgeFit fit =
      variant_screens(variant)
          ? ridge_after_selection(y, officials, candidates, screen_config(o.tau, o.lambda_opt, o.lambda), alphas,
                                  o.grid.ridge(), c.threads)
          : ridge_without_selection(y, officials, candidates, alphas, o.grid.ridge());

  std::vector<std::size_t> cols = vc.officials;
  cols.insert(cols.end(), vc.candidates.begin(), vc.candidates.end());
  {
    auto f = open_out(c.out_path("coefficients.csv"));
    const std::vector<std::string> header{"series_id", "group", "coefficient", "selected"};
    csv::write_row(f, header);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const bool sel = std::binary_search(fit.selected.begin(), fit.selected.end(), k);
      const std::vector<std::string> row{d.columns[cols[k]].series_id,
                                         std::string(to_string(d.columns[cols[k]].group)),
                                         csv::format_double(fit.coefficients(static_cast<Eigen::Index>(k))),
                                         sel ? "1" : "0"};
      csv::write_row(f, row);
    }
  }
  {
    auto f = open_out(c.out_path("gcv_path.csv"));
    const std::vector<std::string> header{"alpha", "gcv"};
    csv::write_row(f, header);
    for (const auto& p : fit.gcv_path) {
      const std::vector<std::string> row{csv::format_double(p.alpha), csv::format_double(p.gcv)};
      csv::write_row(f, row);
    }
  }
  {
    auto f = open_out(c.out_path("fitted.csv"));
    const std::vector<std::string> header{"quarter", "fitted", "actual", "in_sample"};
    csv::write_row(f, header);
    std::vector<Eigen::Index> all(d.quarters.size());
    for (std::size_t r = 0; r < all.size(); ++r) all[r] = static_cast<Eigen::Index>(r);
    const Vector fitted = gather(d.x, all, cols) * fit.coefficients;
    for (std::size_t r = 0; r < all.size(); ++r) {
      const bool in = std::binary_search(rows.begin(), rows.end(), all[r]);
      const std::vector<std::string> row{d.quarters[r].label(), csv::format_double(fitted(all[r])),
                                         csv::format_double(d.y(all[r])), in ? "1" : "0"};
      csv::write_row(f, row);
    }
  }
  const std::size_t n_sel = fit.selected.size() - vc.officials.size();
  out << "variant " << to_string(variant) << ", week " << o.week << ", " << rows.size() << " quarters\n"
      << "alpha = " << fmt("%.6g", fit.alpha) << ", GCV = " << fmt("%.6g", fit.gcv_value) << '\n'
      << n_sel << " of " << vc.candidates.size() << " alternative series in the model\n";

  Manifest m;
  m.add("command", "fit");
  m.add("version", kVersion);
  m.add("calendar_preset_version", kCalendarPresetVersion);
  m.add_options(app);
  m.add("alpha", csv::format_double(fit.alpha));
  m.add("output.coefficients", "coefficients.csv");
  m.add("output.gcv_path", "gcv_path.csv");
  m.add("output.fitted", "fitted.csv");
  m.write(c.out_path("manifest.txt"));
  return kExitOk;
}

// ----------------------------------------------------------------- nowcast

struct NowcastOpts {
  PanelOpts panel;
  std::vector<std::string> variants{"full_no_screen", "ridge_after_selection", "alt_only_screened",
                                    "officials_only"};
  std::vector<int> weeks{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13};
  std::string oos_start;
  std::string oos_end;
  int gap = 2;
  int min_train = 12;
  bool lagged_target = false;
  double tau = 0.10;
  double lambda = 0.0;
  CLI::Option* lambda_opt = nullptr;
  std::string alt_aggregation = "mean";
  std::string official_aggregation = "mean";
  GridOpts grid;
};

int cmd_nowcast(const CLI::App& app, const Common& c, const NowcastOpts& o, std::ostream& out) {
  prepare_out_dir(c);
  const Panel panel = load(o.panel);
  const ReleaseCalendar cal = load_calendar(o.panel, panel);
  std::vector<Variant> variants;
  for (const auto& v : split_list(o.variants)) variants.push_back(parse_variant(v));
  NowcastConfig cfg;
  cfg.screen = screen_config(o.tau, o.lambda_opt, o.lambda);
  cfg.alphas = o.grid.points();
  cfg.ridge = o.grid.ridge();
  cfg.design.alt_aggregation = parse_aggregation(o.alt_aggregation);
  cfg.design.official_aggregation = parse_aggregation(o.official_aggregation);
  cfg.training_gap = o.gap;
  cfg.min_training_quarters = o.min_train;
  cfg.lagged_target = o.lagged_target;
  cfg.weeks = o.weeks;
  cfg.threads = c.threads;
  cfg.oos_start = o.oos_start.empty() ? panel.first + (o.min_train + o.gap - 1 + (o.lagged_target ? o.gap : 0))
                                      : Quarter::parse(o.oos_start);
  if (!o.oos_end.empty()) cfg.oos_end = Quarter::parse(o.oos_end);

  const VariantTable table = compare_variants(panel, cal, variants, cfg);
  {
    auto f = open_out(c.out_path("rmsfe.csv"));
    write_rmsfe_csv(f, table);
  }
  {
    auto f = open_out(c.out_path("nowcasts.csv"));
    write_nowcast_paths_csv(f, table);
  }
  const auto& oos = table.runs.front().oos_quarters;
  out << "RMSFE over " << oos.front().label() << "-" << oos.back().label() << " (" << oos.size()
      << " quarters), * marks the column minimum\n"
      << format_rmsfe_table(table);

  Manifest m;
  m.add("command", "nowcast");
  m.add("version", kVersion);
  m.add("calendar_preset_version", kCalendarPresetVersion);
  m.add_options(app);
  m.add("oos_start", cfg.oos_start.label());
  m.add("oos_end", oos.back().label());
  m.add("output.rmsfe", "rmsfe.csv");
  m.add("output.nowcasts", "nowcasts.csv");
  m.write(c.out_path("manifest.txt"));
  return kExitOk;
}

// ------------------------------------------------------------------ verify

struct VerifyOpts {
  std::vector<std::string> only;
  double k = 2.0;
  int reps = 200;
  int gcv_reps = 100;
  int sure_reps = 200;
  double min_sure_frequency = 0.95;
  double delta = 0.2;
  std::string psi = "identity";
};

int cmd_verify(const CLI::App& app, const Common& c, const VerifyOpts& o, std::ostream& out) {
  prepare_out_dir(c);
  const std::uint64_t seed = c.materialize_seed();
  auto checks = split_list(o.only);
  if (checks.empty()) checks = {"gcv-oos", "error-scaling", "sure-screening"};
  for (const auto& ch : checks) {
    if (ch != "gcv-oos" && ch != "error-scaling" && ch != "sure-screening") {
      throw ConfigError("unknown check '" + ch + "' (expected gcv-oos, error-scaling or sure-screening)");
    }
  }
  if (!(o.k >= 0.0)) throw ConfigError("--k must be nonnegative");

  Manifest m;
  m.add("command", "verify");
  m.add("version", kVersion);
  m.add("seed", std::to_string(seed));
  m.add_options(app);
  auto f = open_out(c.out_path("verify.csv"));
  const std::vector<std::string> header{"check", "statistic", "value", "passed"};
  csv::write_row(f, header);
  bool all = true;
  auto record = [&](const std::string& check, const std::string& stat, const std::string& value, bool ok) {
    const std::vector<std::string> row{check, stat, value, ok ? "1" : "0"};
    csv::write_row(f, row);
    out << (ok ? "PASS " : "FAIL ") << check << ": " << stat << " = " << value << '\n';
    m.add("check." + check + "." + stat, ok ? "pass" : "fail");
    all = all && ok;
  };

  for (const auto& ch : checks) {
    if (ch == "gcv-oos") {
      GcvOosConfig g;
      g.dgp.seed = seed;
      g.dgp.delta = o.delta;
      g.dgp.psi = parse_psi(o.psi);
      g.replications = o.gcv_reps;
      g.threads = c.threads;
      const GcvOosReport r = verify_gcv_oos(g);
      std::string regrets;
      std::string gaps;
      for (const auto& row : r.rows) {
        regrets += (regrets.empty() ? "" : " -> ") + fmt("%.5g", row.median_regret);
        gaps += (gaps.empty() ? "" : " -> ") + fmt("%.5g", row.median_gap);
      }
      record(ch, "regret_nonnegative", r.regret_nonnegative() ? "true" : "false", r.regret_nonnegative());
      record(ch, "median_regret", regrets, r.regret_shrinks());
      record(ch, "median_gcv_gap", gaps, r.gap_shrinks());
    } else if (ch == "error-scaling") {
      DgpConfig base;
      base.delta = o.delta;
      base.psi = parse_psi(o.psi);
      base.seed = seed;
      McOptions mo;
      mo.replications = o.reps;
      mo.threads = c.threads;
      std::vector<Dims> sweep{kTableBaseline};
      for (Dims d : kTableColumns) sweep.push_back(d);
      const ScalingReport r = verify_error_scaling(base, sweep, mo, o.k);
      for (const auto& chk : r.checks) {
        record(ch, chk.name, chk.passed ? "holds" : chk.detail, chk.passed);
      }
    } else {
      SureScreeningConfig s;
      s.dgp.seed = seed;
      s.dgp.delta = o.delta;
      s.dgp.psi = parse_psi(o.psi);
      s.replications = o.sure_reps;
      s.threads = c.threads;
      const SureScreeningReport r = sure_screening_frequency(s);
      std::string freqs;
      for (std::size_t i = 0; i < r.t_values.size(); ++i) {
        freqs += (freqs.empty() ? "" : ", ") + ("T=" + std::to_string(r.t_values[i]) + ": " + fmt("%.3f", r.frequency[i]));
      }
      record(ch, "frequency_monotone", freqs, r.monotone());
      record(ch, "frequency_at_largest_T", fmt("%.3f", r.frequency.back()),
             r.frequency.back() >= o.min_sure_frequency);
    }
  }
  m.add("output.verify", "verify.csv");
  m.write(c.out_path("manifest.txt"));
  return all ? kExitOk : kExitVerificationFailed;
}

LogLevel parse_log_level(const std::string& s) {
  if (s == "debug") return LogLevel::debug;
  if (s == "info") return LogLevel::info;
  if (s == "warn") return LogLevel::warn;
  if (s == "error") return LogLevel::error;
  if (s == "off") return LogLevel::off;
  throw ConfigError("log level must be debug, info, warn, error or off");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ridge after model selection: screening, ridge with GCV, weekly bridge nowcasts, Monte Carlo"};
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "Configuration file (TOML or INI); command-line flags take precedence");
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", common.out_dir, "Output directory");
    common.seed_opt = nullptr;
    sub->add_option("--threads", common.threads, "Worker threads (0 = all cores)");
    sub->add_option("--log-level", common.log_level, "debug, info, warn, error or off");
  };
  std::vector<CLI::Option*> seed_opts;
  auto add_seed = [&](CLI::App* sub) {
    seed_opts.push_back(sub->add_option("--seed", common.seed, "Random seed; generated and recorded when absent"));
  };

  SimulateOpts sim;
  auto* s_sim = app.add_subcommand("simulate", "Monte Carlo ratio tables");
  add_common(s_sim);
  add_seed(s_sim);
  s_sim->add_option("--preset", sim.preset, "paper-tables or single");
  s_sim->add_option("--reps", sim.reps, "Replications per configuration");
  s_sim->add_option("--oos-fraction", sim.oos_fraction, "Held-out rows as a fraction of T");
  s_sim->add_option("--deltas", sim.deltas, "Loadings for the paper-tables preset")->delimiter(',');
  s_sim->add_option("--fdr", sim.fdr, "Screening false-positive rates")->delimiter(',');
  s_sim->add_flag("--fix-beta", sim.fix_beta, "Draw beta once instead of per replication");
  s_sim->add_option("--n", sim.n, "Candidates (single preset)");
  s_sim->add_option("--t", sim.t, "Training rows (single preset)");
  s_sim->add_option("--s", sim.s, "Active candidates (single preset)");
  s_sim->add_option("--delta", sim.delta, "Loading on z1 + z2 (single preset)");
  s_sim->add_option("--psi", sim.psi, "identity or decreasing (single preset)");
  add_grid_options(s_sim, sim.grid);

  ScreenOpts scr;
  auto* s_scr = app.add_subcommand("screen", "t-statistic screening of alternative series");
  add_common(s_scr);
  add_panel_options(s_scr, scr.panel);
  s_scr->add_option("--week", scr.week, "Week-of-quarter model 1..13");
  s_scr->add_option("--tau", scr.tau, "Tolerated false-positive rate");
  scr.lambda_opt = s_scr->add_option("--lambda", scr.lambda, "Explicit threshold (overrides --tau)");
  s_scr->add_option("--train-end", scr.train_end, "Last quarter used");

  FitOpts fit;
  auto* s_fit = app.add_subcommand("fit", "Fit one week model with GCV");
  add_common(s_fit);
  add_panel_options(s_fit, fit.panel);
  s_fit->add_option("--week", fit.week, "Week-of-quarter model 1..13");
  s_fit->add_option("--variant", fit.variant, "Model variant");
  s_fit->add_option("--tau", fit.tau, "Tolerated false-positive rate");
  fit.lambda_opt = s_fit->add_option("--lambda", fit.lambda, "Explicit threshold (overrides --tau)");
  s_fit->add_option("--train-end", fit.train_end, "Last quarter used for estimation");
  add_grid_options(s_fit, fit.grid);

  NowcastOpts now;
  auto* s_now = app.add_subcommand("nowcast", "Recursive pseudo-real-time evaluation");
  add_common(s_now);
  add_panel_options(s_now, now.panel);
  s_now->add_option("--variants,--variant", now.variants, "Model variants")->delimiter(',');
  s_now->add_option("--weeks", now.weeks, "Weeks 1..13")->delimiter(',');
  s_now->add_option("--oos-start", now.oos_start, "First evaluation quarter");
  s_now->add_option("--oos-end", now.oos_end, "Last evaluation quarter");
  s_now->add_option("--gap", now.gap, "Quarters between the last training target and the nowcast");
  s_now->add_option("--min-train", now.min_train, "Minimum training quarters");
  s_now->add_flag("--lagged-target", now.lagged_target, "Add the lagged target as an official regressor");
  s_now->add_option("--tau", now.tau, "Tolerated false-positive rate");
  now.lambda_opt = s_now->add_option("--lambda", now.lambda, "Explicit threshold (overrides --tau)");
  s_now->add_option("--alt-aggregation", now.alt_aggregation, "mean or latest");
  s_now->add_option("--official-aggregation", now.official_aggregation, "mean or latest");
  add_grid_options(s_now, now.grid);

  VerifyOpts ver;
  auto* s_ver = app.add_subcommand("verify", "Empirical checks of the estimator's properties");
  add_common(s_ver);
  add_seed(s_ver);
  s_ver->add_option("--only", ver.only, "gcv-oos, error-scaling, sure-screening")->delimiter(',');
  s_ver->add_option("--k,--tolerance", ver.k, "Directional tolerance in Monte Carlo standard errors");
  s_ver->add_option("--reps", ver.reps, "Replications per configuration for error scaling");
  s_ver->add_option("--gcv-reps", ver.gcv_reps, "Replications per T for the GCV check");
  s_ver->add_option("--sure-reps", ver.sure_reps, "Replications per T for sure screening");
  s_ver->add_option("--min-sure-frequency", ver.min_sure_frequency, "Required frequency at the largest T");
  s_ver->add_option("--delta", ver.delta, "Loading on z1 + z2");
  s_ver->add_option("--psi", ver.psi, "identity or decreasing");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o;
    std::ostringstream e_out;
    const int code = app.exit(e, o, e_out);
    out << o.str();
    err << e_out.str();
    return code == 0 ? kExitOk : kExitConfigError;
  }
  for (CLI::Option* opt : seed_opts) {
    if (opt->count() > 0) common.seed_opt = opt;
  }

  try {
    set_log_level(parse_log_level(common.log_level));
    if (s_sim->parsed()) return cmd_simulate(*s_sim, common, sim, out, err);
    if (s_scr->parsed()) return cmd_screen(*s_scr, common, scr, out);
    if (s_fit->parsed()) return cmd_fit(*s_fit, common, fit, out);
    if (s_now->parsed()) return cmd_nowcast(*s_now, common, now, out);
    if (s_ver->parsed()) return cmd_verify(*s_ver, common, ver, out);
    return kExitConfigError;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumericalError;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const DomainError& e) {
    err << "invalid argument: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const fs::filesystem_error& e) {
    err << "file error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumericalError;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"ramsel"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace ramsel::cli
