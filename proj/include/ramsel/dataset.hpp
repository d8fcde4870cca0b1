#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ramsel {

enum class Group { target, soft, hard, alt };
enum class Frequency { quarterly, monthly, weekly };

std::string_view to_string(Group g);
std::string_view to_string(Frequency f);
Group parse_group(std::string_view s);
Frequency parse_frequency(std::string_view s);

/// Number of sub-periods per quarter: 1, 3 or 13.
int periods_per_quarter(Frequency f);

/// Every quarter has exactly thirteen weeks.
inline constexpr int kWeeksPerQuarter = 13;

/// Calendar quarter, ordered; index() = 4 * year + (q - 1).
class Quarter {
public:
  constexpr Quarter() = default;
  constexpr Quarter(int year, int q) : index_(year * 4 + (q - 1)) {}
  static constexpr Quarter from_index(std::int64_t index) {
    Quarter out;
    out.index_ = index;
    return out;
  }
  /// Accepts "2014Q1", "2014-Q1" and "2014q1".
  static Quarter parse(std::string_view s);

  constexpr std::int64_t index() const noexcept { return index_; }
  constexpr int year() const noexcept { return static_cast<int>(floor_div(index_, 4)); }
  constexpr int q() const noexcept { return static_cast<int>(index_ - 4 * floor_div(index_, 4)) + 1; }
  std::string label() const;

  constexpr Quarter operator+(std::int64_t n) const { return from_index(index_ + n); }
  constexpr Quarter operator-(std::int64_t n) const { return from_index(index_ - n); }
  constexpr std::int64_t operator-(Quarter o) const { return index_ - o.index_; }
  constexpr auto operator<=>(const Quarter&) const = default;

private:
  static constexpr std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    return a >= 0 ? a / b : -((-a + b - 1) / b);
  }
  std::int64_t index_ = 0;
};

/// Period indices on the quarter grid: quarterly -> quarter index, monthly ->
/// 3 * quarter + (month-of-quarter - 1), weekly -> 13 * quarter + (week - 1).
std::int64_t period_index(Frequency f, Quarter q, int sub_period);
Quarter quarter_of(Frequency f, std::int64_t period);
/// 1-based month- or week-of-quarter (1 for quarterly).
int sub_period_of(Frequency f, std::int64_t period);

struct Observation {
  std::int64_t period = 0;
  double value = 0.0;
  bool operator==(const Observation&) const = default;
};

struct Series {
  std::string id;
  Group group = Group::alt;
  Frequency frequency = Frequency::weekly;
  /// Strictly increasing periods; missing observations are simply absent.
  std::vector<Observation> values;
  /// Entry k is the week of the quarter (1..13) at which sub-period k + 1
  /// becomes available; 0 means it is not released within its own quarter.
  std::vector<int> release_weeks;

  /// Throws ValidationError on unsorted/duplicate periods or bad release weeks.
  void validate() const;
  std::optional<double> at(std::int64_t period) const;
  bool operator==(const Series&) const = default;
};

/// Quarterly target plus grouped predictors over a closed quarter range.
struct Panel {
  Series target;
  std::vector<Series> predictors;
  Quarter first;
  Quarter last;

  /// Checks the target frequency and that every predictor has all the
  /// within-quarter observations its release timing promises for every
  /// quarter in range.
  void validate() const;
  std::vector<Quarter> quarters() const;
  const Series* find(std::string_view id) const;
  std::size_t count(Group g) const;
  bool operator==(const Panel&) const = default;
};

/// Sorts values, fills default release weeks (weekly: 1..13) and checks
/// invariants.
Series make_series(std::string id, Group group, Frequency frequency,
                   std::vector<Observation> values, std::vector<int> release_weeks = {});

/// Builds and validates a panel. When no range is given it spans the
/// target's observed quarters.
Panel make_panel(Series target, std::vector<Series> predictors,
                 std::optional<Quarter> first = std::nullopt,
                 std::optional<Quarter> last = std::nullopt);

struct Transform {
  enum class Kind { none, yoy52_diff13, growth_rate, lag_difference };
  Kind kind = Kind::none;
  /// Growth lag; 0 means one year (52, 12 or 4 periods).
  int growth_lag = 0;
  /// Difference lag applied after the growth rate; 0 disables it.
  int diff_lag = 0;

  static Transform none() { return {}; }
  static Transform yoy52_diff13() { return {Kind::yoy52_diff13, 52, 13}; }
  static Transform growth_rate(int lag = 0) { return {Kind::growth_rate, lag, 0}; }
  static Transform lag_difference(int growth, int diff) { return {Kind::lag_difference, growth, diff}; }
  /// "none", "yoy52_diff13", "growth_rate", "growth_rate:k" or "lag_difference:k1:k2".
  static Transform parse(std::string_view s);
};

/// Growth rate x_t / x_{t-k1} - 1 followed by an optional k2-period
/// difference. Periods whose lags are unavailable are dropped, so a
/// contiguous series loses k1 + k2 leading observations.
Series apply_transform(const Series& s, const Transform& t);

/// Column names of the long-format data file and the optional crop range.
struct PanelSchema {
  std::string date_column = "date";
  std::string series_column = "series_id";
  std::string value_column = "value";
  std::optional<Quarter> first;
  std::optional<Quarter> last;
};

/// Reads a long-format CSV (date, series_id, value) and a metadata CSV
/// (series_id, group, frequency, release_week[, transform]). Dates are
/// ISO-8601; weekly dates map to 7-day blocks from the quarter's first day,
/// with a trailing partial block averaged into week 13. release_week lists
/// one week per sub-period separated by ';'.
Panel load_panel(const std::filesystem::path& data_csv, const std::filesystem::path& metadata_csv,
                 const PanelSchema& schema = {});

/// Writes a panel so that load_panel reproduces it exactly.
void save_panel(const Panel& panel, const std::filesystem::path& data_csv,
                const std::filesystem::path& metadata_csv);

/// ISO date of the first day of sub-period `sub` of quarter q.
std::string period_start_date(Frequency f, Quarter q, int sub);

}  // namespace ramsel
