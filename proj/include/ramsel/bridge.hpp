#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ramsel/dataset.hpp"
#include "ramsel/ridge.hpp"
#include "ramsel/screen.hpp"

namespace ramsel {

/// Sub-period k of a series becomes available in week `week` of its quarter.
struct ReleaseEntry {
  int sub_period = 1;
  int week = 1;
  bool operator==(const ReleaseEntry&) const = default;
};

enum class CalendarPreset { ea, us, de };

std::string_view to_string(CalendarPreset p);
CalendarPreset parse_calendar_preset(std::string_view s);

/// Within-quarter availability of every predictor.
class ReleaseCalendar {
public:
  /// Timing taken from each series' own release weeks.
  static ReleaseCalendar from_panel(const Panel& panel);

  /// Group-level timing for a country pattern, applied to the panel's series:
  ///  ea: surveys months 1/2/3 in weeks 5/9/13, hard data month 1 in week 11;
  ///  us: as ea with hard data four weeks earlier (week 7);
  ///  de: as ea with hard data month 1 in week 10.
  /// Weekly series are available in their own week.
  static ReleaseCalendar preset(CalendarPreset p, const Panel& panel);

  /// CSV with columns series_id, sub_period, week. Listed series replace any
  /// existing entries.
  void merge_csv(const std::filesystem::path& path);

  void set(const std::string& series_id, std::vector<ReleaseEntry> entries);
  const std::vector<ReleaseEntry>* find(std::string_view series_id) const;

  /// Sub-periods (1-based, ascending) of the series released by week w.
  std::vector<int> released(std::string_view series_id, int week) const;
  bool active(std::string_view series_id, int week) const;

  /// Throws ValidationError on weeks outside 1..13, decreasing weeks or
  /// too many entries for the series' frequency.
  void validate(const Panel& panel) const;

  const std::map<std::string, std::vector<ReleaseEntry>, std::less<>>& entries() const noexcept {
    return entries_;
  }

private:
  std::map<std::string, std::vector<ReleaseEntry>, std::less<>> entries_;
};

/// How released sub-periods of a quarter collapse into one regressor value.
enum class Aggregation {
  mean_to_date,  ///< average of every sub-period released so far
  latest,        ///< most recent released sub-period only
};

struct DesignColumn {
  std::string series_id;  ///< "const" for the intercept
  Group group = Group::alt;
  Aggregation aggregation = Aggregation::mean_to_date;
};

struct DesignOptions {
  Aggregation official_aggregation = Aggregation::mean_to_date;
  Aggregation alt_aggregation = Aggregation::mean_to_date;
};

/// Regression design of the week-w model: column 0 is the intercept, then
/// one column per predictor in panel order. Rows follow `quarters`.
struct WeekDesign {
  int week = 1;
  std::vector<Quarter> quarters;
  std::vector<DesignColumn> columns;
  /// Inactive columns are all zero.
  Matrix x;
  std::vector<bool> active_mask;
  /// Target per row, NaN where unobserved.
  Vector y;

  /// Active columns whose group is in `groups` (the intercept has group target).
  std::vector<std::size_t> active_columns(std::span<const Group> groups) const;
};

inline constexpr const char* kInterceptId = "const";

WeekDesign build_week_design(const Panel& panel, const ReleaseCalendar& calendar, int week,
                             std::span<const Quarter> quarters, const DesignOptions& options = {});

enum class Variant {
  full_no_screen,         ///< (a) officials + all alternative series, no screening
  ridge_after_selection,  ///< (b) officials + screened alternative series
  alt_only_screened,      ///< (c) screened alternative series only
  alt_only_no_screen,     ///< alternative series only, no screening
  officials_only,         ///< (d) official series only
};

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view s);

/// Design columns a variant uses as officials (always led by the intercept)
/// and as screening candidates.
struct VariantColumns {
  std::vector<std::size_t> officials;
  std::vector<std::size_t> candidates;
};
VariantColumns variant_columns(const WeekDesign& design, Variant v);
/// Whether the variant screens its candidates before the ridge fit.
bool variant_screens(Variant v);

struct NowcastConfig {
  Variant variant = Variant::ridge_after_selection;
  ScreenConfig screen = ScreenConfig::from_tau(0.10);
  std::vector<double> alphas = AlphaGrid{}.points();
  RidgeOptions ridge;
  DesignOptions design;
  /// First evaluation quarter; evaluation runs to the panel's last quarter
  /// unless oos_end is set.
  Quarter oos_start;
  std::optional<Quarter> oos_end;
  /// Last training quarter is q - training_gap.
  int training_gap = 2;
  int min_training_quarters = 12;
  std::vector<int> weeks{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13};
  /// Adds y_{t - training_gap} as an official regressor.
  bool lagged_target = false;
  unsigned threads = 1;
};

struct NowcastRun {
  Variant variant = Variant::ridge_after_selection;
  std::vector<Quarter> oos_quarters;
  std::vector<int> weeks;
  /// Length 13, NaN for weeks not evaluated.
  Vector per_week_rmsfe;
  /// quarters x 13, NaN for weeks not evaluated.
  Matrix nowcasts;
  Vector actuals;
  /// Penalty chosen for each (quarter, week), NaN where not evaluated.
  Matrix alphas;
  /// Number of screened-in alternative series per (quarter, week).
  Matrix selected_counts;
};

/// Pseudo-real-time recursive evaluation: for every evaluation quarter q and
/// week w the model M(w) is re-estimated on all quarters up to q - gap and
/// applied to q's week-w regressors.
NowcastRun nowcast_recursive(const Panel& panel, const ReleaseCalendar& calendar,
                             const NowcastConfig& config);

struct VariantTable {
  std::vector<Variant> variants;
  std::vector<int> weeks;
  /// variants x weeks
  Matrix rmsfe;
  /// is_best[v][k]: variant v attains the column minimum for weeks[k].
  std::vector<std::vector<bool>> is_best;
  std::vector<NowcastRun> runs;
};

VariantTable compare_variants(const Panel& panel, const ReleaseCalendar& calendar,
                              std::span<const Variant> variants, const NowcastConfig& base);

void write_rmsfe_csv(std::ostream& out, const VariantTable& table);
/// Aligned text table; column minima are marked with '*'.
std::string format_rmsfe_table(const VariantTable& table);
/// quarter, week, variant, nowcast, actual, error
void write_nowcast_paths_csv(std::ostream& out, const VariantTable& table);

}  // namespace ramsel
