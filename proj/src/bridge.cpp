#include "ramsel/bridge.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include "ramsel/csv.hpp"
#include "ramsel/error.hpp"
#include "ramsel/parallel.hpp"

namespace ramsel {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<ReleaseEntry> own_timing(const Series& s) {
  std::vector<ReleaseEntry> out;
  for (std::size_t k = 0; k < s.release_weeks.size(); ++k) {
    if (s.release_weeks[k] > 0) out.push_back({static_cast<int>(k) + 1, s.release_weeks[k]});
  }
  return out;
}

bool uses_officials(Variant v) {
  return v == Variant::full_no_screen || v == Variant::ridge_after_selection ||
         v == Variant::officials_only;
}

bool uses_alt(Variant v) { return v != Variant::officials_only; }

}  // namespace

std::string_view to_string(CalendarPreset p) {
  switch (p) {
    case CalendarPreset::ea: return "ea";
    case CalendarPreset::us: return "us";
    case CalendarPreset::de: return "de";
  }
  return "?";
}

CalendarPreset parse_calendar_preset(std::string_view s) {
  if (s == "ea" || s == "EA") return CalendarPreset::ea;
  if (s == "us" || s == "US") return CalendarPreset::us;
  if (s == "de" || s == "DE") return CalendarPreset::de;
  throw ConfigError("unknown calendar preset '" + std::string(s) + "' (expected ea, us or de)");
}

ReleaseCalendar ReleaseCalendar::from_panel(const Panel& panel) {
  ReleaseCalendar cal;
  for (const auto& s : panel.predictors) cal.set(s.id, own_timing(s));
  cal.validate(panel);
  return cal;
}

ReleaseCalendar ReleaseCalendar::preset(CalendarPreset p, const Panel& panel) {
  ReleaseCalendar cal;
  const int hard_week = p == CalendarPreset::ea ? 11 : p == CalendarPreset::us ? 7 : 10;
  for (const auto& s : panel.predictors) {
    std::vector<ReleaseEntry> e;
    if (s.frequency == Frequency::weekly) {
      for (int w = 1; w <= kWeeksPerQuarter; ++w) e.push_back({w, w});
    } else if (s.frequency == Frequency::monthly && s.group == Group::soft) {
      e = {{1, 5}, {2, 9}, {3, 13}};
    } else if (s.frequency == Frequency::monthly && s.group == Group::hard) {
      e = {{1, hard_week}};
    } else {
      e = own_timing(s);
    }
    cal.set(s.id, std::move(e));
  }
  cal.validate(panel);
  return cal;
}

void ReleaseCalendar::merge_csv(const std::filesystem::path& path) {
  const auto t = csv::read(path);
  const auto c_id = t.column("series_id");
  const auto c_sub = t.column("sub_period");
  const auto c_week = t.column("week");
  std::map<std::string, std::vector<ReleaseEntry>> fresh;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    double sub = 0.0;
    double week = 0.0;
    if (!csv::parse_double(t.rows[r][c_sub], sub) || !csv::parse_double(t.rows[r][c_week], week)) {
      throw ParseError("invalid calendar entry", t.lines[r]);
    }
    fresh[t.rows[r][c_id]].push_back({static_cast<int>(sub), static_cast<int>(week)});
  }
  for (auto& [id, e] : fresh) set(id, std::move(e));
}

void ReleaseCalendar::set(const std::string& series_id, std::vector<ReleaseEntry> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const ReleaseEntry& a, const ReleaseEntry& b) { return a.sub_period < b.sub_period; });
  entries_[series_id] = std::move(entries);
}

const std::vector<ReleaseEntry>* ReleaseCalendar::find(std::string_view series_id) const {
  const auto it = entries_.find(series_id);
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<int> ReleaseCalendar::released(std::string_view series_id, int week) const {
  std::vector<int> out;
  if (const auto* e = find(series_id)) {
    for (const auto& r : *e) {
      if (r.week <= week) out.push_back(r.sub_period);
    }
  }
  return out;
}

bool ReleaseCalendar::active(std::string_view series_id, int week) const {
  return !released(series_id, week).empty();
}

void ReleaseCalendar::validate(const Panel& panel) const {
  for (const auto& [id, entries] : entries_) {
    const Series* s = panel.find(id);
    if (s == nullptr) throw ValidationError("calendar lists unknown series '" + id + "'");
    const int n = periods_per_quarter(s->frequency);
    if (static_cast<int>(entries.size()) > n) {
      throw ValidationError("calendar has more entries than sub-periods for '" + id + "'");
    }
    int prev_week = 0;
    int prev_sub = 0;
    for (const auto& e : entries) {
      if (e.week < 1 || e.week > kWeeksPerQuarter) {
        throw ValidationError("calendar week outside 1..13 for '" + id + "'");
      }
      if (e.sub_period < 1 || e.sub_period > n || e.sub_period == prev_sub) {
        throw ValidationError("calendar sub-period invalid or repeated for '" + id + "'");
      }
      if (e.week < prev_week) {
        throw ValidationError("calendar availability weeks decrease for '" + id + "'");
      }
      prev_week = e.week;
      prev_sub = e.sub_period;
    }
  }
}

std::vector<std::size_t> WeekDesign::active_columns(std::span<const Group> groups) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (!active_mask[j]) continue;
    if (std::find(groups.begin(), groups.end(), columns[j].group) != groups.end()) out.push_back(j);
  }
  return out;
}

WeekDesign build_week_design(const Panel& panel, const ReleaseCalendar& calendar, int week,
                             std::span<const Quarter> quarters, const DesignOptions& options) {
  if (week < 1 || week > kWeeksPerQuarter) {
    throw ConfigError("week must lie in 1..13, got " + std::to_string(week));
  }
  WeekDesign d;
  d.week = week;
  d.quarters.assign(quarters.begin(), quarters.end());
  for (const Quarter q : quarters) {
    if (q < panel.first || q > panel.last) {
      throw DataError("quarter " + q.label() + " lies outside the panel range");
    }
  }
  const auto rows = static_cast<Eigen::Index>(quarters.size());
  const auto cols = static_cast<Eigen::Index>(panel.predictors.size()) + 1;
  d.x = Matrix::Zero(rows, cols);
  d.y = Vector::Constant(rows, kNaN);
  d.columns.push_back({kInterceptId, Group::target, Aggregation::mean_to_date});
  d.active_mask.push_back(true);
  d.x.col(0).setOnes();
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (auto v = panel.target.at(quarters[static_cast<std::size_t>(r)].index())) d.y(r) = *v;
  }

  for (std::size_t j = 0; j < panel.predictors.size(); ++j) {
    const Series& s = panel.predictors[j];
    const auto col = static_cast<Eigen::Index>(j) + 1;
    const Aggregation agg =
        s.group == Group::alt ? options.alt_aggregation : options.official_aggregation;
    d.columns.push_back({s.id, s.group, agg});
    const auto subs = calendar.released(s.id, week);
    d.active_mask.push_back(!subs.empty());
    if (subs.empty()) continue;
    for (Eigen::Index r = 0; r < rows; ++r) {
      const Quarter q = quarters[static_cast<std::size_t>(r)];
      double sum = 0.0;
      double last = kNaN;
      for (int k : subs) {
        const auto v = s.at(period_index(s.frequency, q, k));
        if (!v) {
          throw DataGapError("series '" + s.id + "' has no value for sub-period " +
                             std::to_string(k) + " of quarter " + q.label() +
                             ", required at week " + std::to_string(week));
        }
        sum += *v;
        last = *v;
      }
      d.x(r, col) = agg == Aggregation::latest ? last : sum / static_cast<double>(subs.size());
    }
  }
  return d;
}

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::full_no_screen: return "full_no_screen";
    case Variant::ridge_after_selection: return "ridge_after_selection";
    case Variant::alt_only_screened: return "alt_only_screened";
    case Variant::alt_only_no_screen: return "alt_only_no_screen";
    case Variant::officials_only: return "officials_only";
  }
  return "?";
}

Variant parse_variant(std::string_view s) {
  for (Variant v : {Variant::full_no_screen, Variant::ridge_after_selection,
                    Variant::alt_only_screened, Variant::alt_only_no_screen,
                    Variant::officials_only}) {
    if (s == to_string(v)) return v;
  }
  if (s == "a") return Variant::full_no_screen;
  if (s == "b") return Variant::ridge_after_selection;
  if (s == "c") return Variant::alt_only_screened;
  if (s == "d") return Variant::officials_only;
  throw ConfigError("unknown model variant '" + std::string(s) + "'");
}

bool variant_screens(Variant v) {
  return v == Variant::ridge_after_selection || v == Variant::alt_only_screened;
}

VariantColumns variant_columns(const WeekDesign& design, Variant v) {
  static constexpr Group official_groups[] = {Group::soft, Group::hard};
  static constexpr Group alt_groups[] = {Group::alt};
  VariantColumns out;
  out.officials.push_back(0);
  if (uses_officials(v)) {
    for (auto j : design.active_columns(official_groups)) out.officials.push_back(j);
  }
  if (uses_alt(v)) out.candidates = design.active_columns(alt_groups);
  return out;
}

NowcastRun nowcast_recursive(const Panel& panel, const ReleaseCalendar& calendar,
                             const NowcastConfig& config) {
  const Variant variant = config.variant;
  const std::size_t n_official = panel.count(Group::soft) + panel.count(Group::hard);
  if (variant == Variant::officials_only && n_official == 0) {
    throw ConfigError("variant officials_only needs at least one soft or hard series");
  }
  if (uses_alt(variant) && panel.count(Group::alt) == 0) {
    throw ConfigError("variant " + std::string(to_string(variant)) +
                      " needs at least one alternative series");
  }
  if (config.training_gap < 1) throw ConfigError("training gap must be at least one quarter");
  if (config.weeks.empty()) throw ConfigError("no weeks requested");
  std::set<int> uniq;
  for (int w : config.weeks) {
    if (w < 1 || w > kWeeksPerQuarter) throw ConfigError("week must lie in 1..13");
    if (!uniq.insert(w).second) throw ConfigError("week listed twice");
  }
  calendar.validate(panel);

  const std::vector<Quarter> all = panel.quarters();
  auto row_of = [&](Quarter q) { return static_cast<Eigen::Index>(q - panel.first); };
  auto target = [&](Quarter q) { return panel.target.at(q.index()); };

  const Quarter oos_last = config.oos_end ? std::min(*config.oos_end, panel.last) : panel.last;
  NowcastRun run;
  run.variant = variant;
  run.weeks = config.weeks;
  std::sort(run.weeks.begin(), run.weeks.end());
  for (Quarter q = std::max(config.oos_start, panel.first); q <= oos_last; q = q + 1) {
    if (target(q)) run.oos_quarters.push_back(q);
  }
  if (run.oos_quarters.empty()) throw ConfigError("no evaluation quarter with an observed target");

  auto usable_for_training = [&](Quarter t) {
    if (!target(t)) return false;
    if (config.lagged_target) {
      const Quarter lag = t - config.training_gap;
      return lag >= panel.first && target(lag).has_value();
    }
    return true;
  };
  {
    int n = 0;
    for (Quarter t = panel.first; t <= run.oos_quarters.front() - config.training_gap; t = t + 1) {
      if (usable_for_training(t)) ++n;
    }
    if (n < config.min_training_quarters) {
      throw ConfigError("only " + std::to_string(n) + " training quarters before " +
                        run.oos_quarters.front().label() + "; need at least " +
                        std::to_string(config.min_training_quarters));
    }
  }
  if (config.lagged_target) {
    for (Quarter q : run.oos_quarters) {
      if (!target(q - config.training_gap)) {
        throw DataGapError("lagged target unavailable for quarter " + q.label());
      }
    }
  }

  std::vector<WeekDesign> designs;
  designs.reserve(run.weeks.size());
  for (int w : run.weeks) designs.push_back(build_week_design(panel, calendar, w, all, config.design));

  const auto nq = static_cast<Eigen::Index>(run.oos_quarters.size());
  run.nowcasts = Matrix::Constant(nq, kWeeksPerQuarter, kNaN);
  run.alphas = Matrix::Constant(nq, kWeeksPerQuarter, kNaN);
  run.selected_counts = Matrix::Constant(nq, kWeeksPerQuarter, kNaN);
  run.actuals.resize(nq);
  for (Eigen::Index i = 0; i < nq; ++i) run.actuals(i) = *target(run.oos_quarters[static_cast<std::size_t>(i)]);

  const std::size_t tasks = run.oos_quarters.size() * designs.size();
  parallel_for(tasks, config.threads, [&](std::size_t task) {
    const std::size_t qi = task / designs.size();
    const WeekDesign& d = designs[task % designs.size()];
    const Quarter q = run.oos_quarters[qi];

    std::vector<Eigen::Index> train;
    for (Quarter t = panel.first; t <= q - config.training_gap; t = t + 1) {
      if (usable_for_training(t)) train.push_back(row_of(t));
    }
    const VariantColumns vc = variant_columns(d, variant);
    const std::vector<std::size_t>& off_cols = vc.officials;
    const std::vector<std::size_t>& alt_cols = vc.candidates;

    const auto nt = static_cast<Eigen::Index>(train.size());
    const auto n1 = static_cast<Eigen::Index>(off_cols.size()) + (config.lagged_target ? 1 : 0);
    Matrix officials(nt, n1);
    Matrix candidates(nt, static_cast<Eigen::Index>(alt_cols.size()));
    Vector y(nt);
    Vector x_off(n1);
    Vector x_alt(static_cast<Eigen::Index>(alt_cols.size()));
    const Eigen::Index qrow = row_of(q);
    for (Eigen::Index r = 0; r < nt; ++r) {
      const Eigen::Index src = train[static_cast<std::size_t>(r)];
      y(r) = d.y(src);
      for (std::size_t k = 0; k < off_cols.size(); ++k) {
        officials(r, static_cast<Eigen::Index>(k)) = d.x(src, static_cast<Eigen::Index>(off_cols[k]));
      }
      if (config.lagged_target) officials(r, n1 - 1) = d.y(src - config.training_gap);
      for (std::size_t k = 0; k < alt_cols.size(); ++k) {
        candidates(r, static_cast<Eigen::Index>(k)) = d.x(src, static_cast<Eigen::Index>(alt_cols[k]));
      }
    }
    for (std::size_t k = 0; k < off_cols.size(); ++k) {
      x_off(static_cast<Eigen::Index>(k)) = d.x(qrow, static_cast<Eigen::Index>(off_cols[k]));
    }
    if (config.lagged_target) x_off(n1 - 1) = d.y(qrow - config.training_gap);
    for (std::size_t k = 0; k < alt_cols.size(); ++k) {
      x_alt(static_cast<Eigen::Index>(k)) = d.x(qrow, static_cast<Eigen::Index>(alt_cols[k]));
    }

    RidgeFit fit = variant_screens(variant)
                       ? ridge_after_selection(y, officials, candidates, config.screen,
                                               config.alphas, config.ridge)
                       : ridge_without_selection(y, officials, candidates, config.alphas,
                                                 config.ridge);
    Vector x_full(n1 + x_alt.size());
    x_full << x_off, x_alt;
    const auto wi = static_cast<Eigen::Index>(d.week - 1);
    const auto qi_e = static_cast<Eigen::Index>(qi);
    run.nowcasts(qi_e, wi) = fit.coefficients.dot(x_full);
    run.alphas(qi_e, wi) = fit.alpha;
    run.selected_counts(qi_e, wi) =
        static_cast<double>(fit.selected.size()) - static_cast<double>(n1);
  });

  run.per_week_rmsfe = Vector::Constant(kWeeksPerQuarter, kNaN);
  for (int w : run.weeks) {
    CompensatedSum s;
    for (Eigen::Index i = 0; i < nq; ++i) {
      const double e = run.nowcasts(i, w - 1) - run.actuals(i);
      s.add(e * e);
    }
    run.per_week_rmsfe(w - 1) = std::sqrt(s.value() / static_cast<double>(nq));
  }
  return run;
}

VariantTable compare_variants(const Panel& panel, const ReleaseCalendar& calendar,
                              std::span<const Variant> variants, const NowcastConfig& base) {
  if (variants.empty()) throw ConfigError("no model variants requested");
  VariantTable table;
  table.variants.assign(variants.begin(), variants.end());
  table.weeks = base.weeks;
  std::sort(table.weeks.begin(), table.weeks.end());
  for (Variant v : variants) {
    NowcastConfig cfg = base;
    cfg.variant = v;
    table.runs.push_back(nowcast_recursive(panel, calendar, cfg));
  }
  const auto nv = static_cast<Eigen::Index>(variants.size());
  const auto nw = static_cast<Eigen::Index>(table.weeks.size());
  table.rmsfe.resize(nv, nw);
  for (Eigen::Index v = 0; v < nv; ++v) {
    for (Eigen::Index k = 0; k < nw; ++k) {
      table.rmsfe(v, k) = table.runs[static_cast<std::size_t>(v)].per_week_rmsfe(
          table.weeks[static_cast<std::size_t>(k)] - 1);
    }
  }
  table.is_best.assign(variants.size(), std::vector<bool>(table.weeks.size(), false));
  for (Eigen::Index k = 0; k < nw; ++k) {
    const double best = table.rmsfe.col(k).minCoeff();
    for (Eigen::Index v = 0; v < nv; ++v) {
      table.is_best[static_cast<std::size_t>(v)][static_cast<std::size_t>(k)] =
          table.rmsfe(v, k) == best;
    }
  }
  return table;
}

void write_rmsfe_csv(std::ostream& out, const VariantTable& table) {
  std::vector<std::string> header{"variant"};
  for (int w : table.weeks) header.push_back("M" + std::to_string(w));
  for (int w : table.weeks) header.push_back("best_M" + std::to_string(w));
  csv::write_row(out, header);
  for (std::size_t v = 0; v < table.variants.size(); ++v) {
    std::vector<std::string> row{std::string(to_string(table.variants[v]))};
    for (std::size_t k = 0; k < table.weeks.size(); ++k) {
      row.push_back(csv::format_double(
          table.rmsfe(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(k))));
    }
    for (std::size_t k = 0; k < table.weeks.size(); ++k) {
      row.push_back(table.is_best[v][k] ? "1" : "0");
    }
    csv::write_row(out, row);
  }
}

std::string format_rmsfe_table(const VariantTable& table) {
  std::size_t name_width = 7;
  for (Variant v : table.variants) name_width = std::max(name_width, to_string(v).size());
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(name_width)) << "variant";
  for (int w : table.weeks) os << std::right << std::setw(10) << ("M" + std::to_string(w));
  os << '\n';
  for (std::size_t v = 0; v < table.variants.size(); ++v) {
    os << std::left << std::setw(static_cast<int>(name_width)) << to_string(table.variants[v]);
    for (std::size_t k = 0; k < table.weeks.size(); ++k) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.4f%s",
                    table.rmsfe(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(k)),
                    table.is_best[v][k] ? "*" : " ");
      os << std::right << std::setw(10) << buf;
    }
    os << '\n';
  }
  return os.str();
}

void write_nowcast_paths_csv(std::ostream& out, const VariantTable& table) {
  const std::vector<std::string> header{"quarter", "week", "variant", "nowcast", "actual", "error"};
  csv::write_row(out, header);
  for (const auto& run : table.runs) {
    for (std::size_t i = 0; i < run.oos_quarters.size(); ++i) {
      for (int w : run.weeks) {
        const double nc = run.nowcasts(static_cast<Eigen::Index>(i), w - 1);
        const double act = run.actuals(static_cast<Eigen::Index>(i));
        const std::vector<std::string> row{run.oos_quarters[i].label(), std::to_string(w),
                                           std::string(to_string(run.variant)),
                                           csv::format_double(nc), csv::format_double(act),
                                           csv::format_double(nc - act)};
        csv::write_row(out, row);
      }
    }
  }
}

}  // namespace ramsel
