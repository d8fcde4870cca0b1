#include "ramsel/dataset.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "ramsel/csv.hpp"
#include "ramsel/error.hpp"

namespace ramsel {
namespace {

namespace chr = std::chrono;

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

chr::year_month_day parse_iso_date(std::string_view s, std::size_t row) {
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  char extra = 0;
  const std::string str(s);
  if (std::sscanf(str.c_str(), "%d-%u-%u%c", &y, &m, &d, &extra) != 3) {
    throw ParseError("invalid ISO-8601 date '" + str + "'", row);
  }
  const chr::year_month_day ymd{chr::year{y}, chr::month{m}, chr::day{d}};
  if (!ymd.ok()) throw ParseError("invalid calendar date '" + str + "'", row);
  return ymd;
}

Quarter quarter_of_date(const chr::year_month_day& ymd) {
  return Quarter(static_cast<int>(ymd.year()), (static_cast<unsigned>(ymd.month()) - 1) / 3 + 1);
}

chr::sys_days quarter_start(Quarter q) {
  return chr::sys_days{chr::year_month_day{chr::year{q.year()},
                                           chr::month{static_cast<unsigned>(3 * (q.q() - 1) + 1)},
                                           chr::day{1}}};
}

std::string iso(chr::sys_days d) {
  const chr::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

int periods_per_year(Frequency f) {
  switch (f) {
    case Frequency::quarterly: return 4;
    case Frequency::monthly: return 12;
    case Frequency::weekly: return 4 * kWeeksPerQuarter;
  }
  return 0;
}

std::vector<int> parse_release_weeks(std::string_view s, std::size_t row) {
  std::vector<int> out;
  std::string field = csv::trim(s);
  if (field.empty()) return out;
  std::stringstream ss(field);
  std::string tok;
  while (std::getline(ss, tok, ';')) {
    tok = csv::trim(tok);
    double v = 0.0;
    if (!csv::parse_double(tok, v) || v != std::floor(v)) {
      throw ParseError("invalid release_week entry '" + tok + "'", row);
    }
    out.push_back(static_cast<int>(v));
  }
  return out;
}

std::string join_weeks(const std::vector<int>& w) {
  std::string out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i > 0) out += ';';
    out += std::to_string(w[i]);
  }
  return out;
}

}  // namespace

std::string_view to_string(Group g) {
  switch (g) {
    case Group::target: return "target";
    case Group::soft: return "soft";
    case Group::hard: return "hard";
    case Group::alt: return "alt";
  }
  return "?";
}

std::string_view to_string(Frequency f) {
  switch (f) {
    case Frequency::quarterly: return "quarterly";
    case Frequency::monthly: return "monthly";
    case Frequency::weekly: return "weekly";
  }
  return "?";
}

Group parse_group(std::string_view s) {
  const auto l = lower(s);
  if (l == "target") return Group::target;
  if (l == "soft") return Group::soft;
  if (l == "hard") return Group::hard;
  if (l == "alt" || l == "alternative") return Group::alt;
  throw SchemaError("unknown series group '" + std::string(s) + "'");
}

Frequency parse_frequency(std::string_view s) {
  const auto l = lower(s);
  if (l == "quarterly" || l == "q") return Frequency::quarterly;
  if (l == "monthly" || l == "m") return Frequency::monthly;
  if (l == "weekly" || l == "w") return Frequency::weekly;
  throw SchemaError("unknown frequency '" + std::string(s) + "'");
}

int periods_per_quarter(Frequency f) {
  switch (f) {
    case Frequency::quarterly: return 1;
    case Frequency::monthly: return 3;
    case Frequency::weekly: return kWeeksPerQuarter;
  }
  return 1;
}

Quarter Quarter::parse(std::string_view s) {
  const std::string str = lower(csv::trim(s));
  int y = 0;
  int q = 0;
  char extra = 0;
  if (std::sscanf(str.c_str(), "%dq%d%c", &y, &q, &extra) != 2 &&
      std::sscanf(str.c_str(), "%d-q%d%c", &y, &q, &extra) != 2) {
    throw ConfigError("invalid quarter '" + std::string(s) + "' (expected e.g. 2014Q1)");
  }
  if (q < 1 || q > 4) throw ConfigError("quarter number out of range in '" + std::string(s) + "'");
  return Quarter(y, q);
}

std::string Quarter::label() const {
  return std::to_string(year()) + "Q" + std::to_string(q());
}

std::int64_t period_index(Frequency f, Quarter q, int sub_period) {
  return q.index() * periods_per_quarter(f) + (sub_period - 1);
}

Quarter quarter_of(Frequency f, std::int64_t period) {
  const std::int64_t n = periods_per_quarter(f);
  const std::int64_t qi = period >= 0 ? period / n : -((-period + n - 1) / n);
  return Quarter::from_index(qi);
}

int sub_period_of(Frequency f, std::int64_t period) {
  const std::int64_t n = periods_per_quarter(f);
  return static_cast<int>(period - quarter_of(f, period).index() * n) + 1;
}

void Series::validate() const {
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i].period <= values[i - 1].period) {
      throw ValidationError("series '" + id + "': periods must be strictly increasing");
    }
  }
  if (static_cast<int>(release_weeks.size()) > periods_per_quarter(frequency)) {
    throw ValidationError("series '" + id + "': more release weeks than sub-periods per quarter");
  }
  int prev = 0;
  for (int w : release_weeks) {
    if (w < 0 || w > kWeeksPerQuarter) {
      throw ValidationError("series '" + id + "': release week must lie in 1..13");
    }
    if (w == 0) continue;
    if (w < prev) {
      throw ValidationError("series '" + id + "': release weeks must be nondecreasing");
    }
    prev = w;
  }
  for (const auto& o : values) {
    if (!std::isfinite(o.value)) {
      throw ValidationError("series '" + id + "': non-finite value stored");
    }
  }
}

std::optional<double> Series::at(std::int64_t period) const {
  auto it = std::lower_bound(values.begin(), values.end(), period,
                             [](const Observation& o, std::int64_t p) { return o.period < p; });
  if (it == values.end() || it->period != period) return std::nullopt;
  return it->value;
}

Series make_series(std::string id, Group group, Frequency frequency,
                   std::vector<Observation> values, std::vector<int> release_weeks) {
  Series s;
  s.id = std::move(id);
  s.group = group;
  s.frequency = frequency;
  std::stable_sort(values.begin(), values.end(),
                   [](const Observation& a, const Observation& b) { return a.period < b.period; });
  s.values = std::move(values);
  if (release_weeks.empty() && frequency == Frequency::weekly) {
    for (int w = 1; w <= kWeeksPerQuarter; ++w) release_weeks.push_back(w);
  }
  s.release_weeks = std::move(release_weeks);
  s.validate();
  return s;
}

void Panel::validate() const {
  if (target.frequency != Frequency::quarterly) {
    throw ValidationError("target '" + target.id + "' must be quarterly");
  }
  if (target.group != Group::target) {
    throw ValidationError("target '" + target.id + "' must have group 'target'");
  }
  if (last < first) throw ValidationError("panel quarter range is empty");
  target.validate();
  if (!target.at(first.index()) || !target.at(last.index())) {
    throw ValidationError("target '" + target.id + "' must be observed at both ends of " +
                          first.label() + ".." + last.label());
  }
  for (const auto& o : target.values) {
    if (o.period < first.index() || o.period > last.index()) {
      throw ValidationError("target '" + target.id + "' has observations outside the panel range");
    }
  }
  std::set<std::string> ids{target.id};
  for (const auto& s : predictors) {
    if (!ids.insert(s.id).second) {
      throw ValidationError("duplicate series id '" + s.id + "'");
    }
    if (s.group == Group::target) {
      throw ValidationError("predictor '" + s.id + "' cannot have group 'target'");
    }
    s.validate();
    const int n = periods_per_quarter(s.frequency);
    for (Quarter q = first; q <= last; q = q + 1) {
      int have = 0;
      int need = 0;
      int first_missing = 0;
      for (int k = 1; k <= n; ++k) {
        const bool required = static_cast<std::size_t>(k) <= s.release_weeks.size() &&
                              s.release_weeks[static_cast<std::size_t>(k - 1)] > 0;
        const bool present = s.at(period_index(s.frequency, q, k)).has_value();
        if (present) ++have;
        if (required) {
          ++need;
          if (!present && first_missing == 0) first_missing = k;
        }
      }
      if (first_missing != 0) {
        if (s.frequency == Frequency::weekly) {
          throw ValidationError("series '" + s.id + "' has " + std::to_string(have) +
                                " of 13 weekly observations in quarter " + q.label());
        }
        throw ValidationError("series '" + s.id + "' is missing sub-period " +
                              std::to_string(first_missing) + " of quarter " + q.label() +
                              " although it is released within the quarter");
      }
      (void)need;
    }
  }
}

std::vector<Quarter> Panel::quarters() const {
  std::vector<Quarter> out;
  for (Quarter q = first; q <= last; q = q + 1) out.push_back(q);
  return out;
}

const Series* Panel::find(std::string_view id) const {
  if (target.id == id) return &target;
  for (const auto& s : predictors) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

std::size_t Panel::count(Group g) const {
  return static_cast<std::size_t>(std::count_if(
      predictors.begin(), predictors.end(), [g](const Series& s) { return s.group == g; }));
}

Panel make_panel(Series target, std::vector<Series> predictors, std::optional<Quarter> first,
                 std::optional<Quarter> last) {
  Panel p;
  if (target.values.empty()) throw ValidationError("target '" + target.id + "' has no observations");
  const Quarter obs_first = quarter_of(target.frequency, target.values.front().period);
  const Quarter obs_last = quarter_of(target.frequency, target.values.back().period);
  p.first = first.value_or(obs_first);
  p.last = last.value_or(obs_last);
  std::erase_if(target.values, [&](const Observation& o) {
    return o.period < p.first.index() || o.period > p.last.index();
  });
  p.target = std::move(target);
  p.predictors = std::move(predictors);
  p.validate();
  return p;
}

Transform Transform::parse(std::string_view s) {
  const std::string l = lower(csv::trim(s));
  if (l.empty() || l == "none") return none();
  if (l == "yoy52_diff13") return yoy52_diff13();
  int a = 0;
  int b = 0;
  char extra = 0;
  if (l == "growth_rate") return growth_rate();
  if (std::sscanf(l.c_str(), "growth_rate:%d%c", &a, &extra) == 1) return growth_rate(a);
  if (std::sscanf(l.c_str(), "lag_difference:%d:%d%c", &a, &b, &extra) == 2) {
    return lag_difference(a, b);
  }
  throw ConfigError("unknown transform '" + std::string(s) + "'");
}

Series apply_transform(const Series& s, const Transform& t) {
  if (t.kind == Transform::Kind::none) return s;
  if (t.kind == Transform::Kind::yoy52_diff13 && s.frequency != Frequency::weekly) {
    throw ConfigError("yoy52_diff13 applies to weekly series only ('" + s.id + "')");
  }
  const int k1 = t.growth_lag == 0 ? periods_per_year(s.frequency) : t.growth_lag;
  const int k2 = t.diff_lag;
  if (k1 < 1 || k2 < 0) throw ConfigError("transform lags must be positive");

  std::vector<Observation> growth;
  growth.reserve(s.values.size());
  for (const auto& o : s.values) {
    const auto base = s.at(o.period - k1);
    if (!base) continue;
    if (*base == 0.0) {
      throw DataError("series '" + s.id + "': zero base value in growth rate at period " +
                      std::to_string(o.period));
    }
    growth.push_back({o.period, o.value / *base - 1.0});
  }
  std::vector<Observation> out;
  if (k2 == 0) {
    out = std::move(growth);
  } else {
    Series g = s;
    g.values = growth;
    for (const auto& o : growth) {
      const auto prev = g.at(o.period - k2);
      if (prev) out.push_back({o.period, o.value - *prev});
    }
  }
  if (out.empty()) {
    throw LengthError("series '" + s.id + "' is too short for a transform with lags " +
                      std::to_string(k1) + "+" + std::to_string(k2));
  }
  Series r = s;
  r.values = std::move(out);
  return r;
}

std::string period_start_date(Frequency f, Quarter q, int sub) {
  const auto start = quarter_start(q);
  switch (f) {
    case Frequency::quarterly: return iso(start);
    case Frequency::monthly: {
      const chr::year_month_day ymd{start};
      return iso(chr::sys_days{ymd + chr::months{sub - 1}});
    }
    case Frequency::weekly: return iso(start + chr::days{7 * (sub - 1)});
  }
  return {};
}

Panel load_panel(const std::filesystem::path& data_csv, const std::filesystem::path& metadata_csv,
                 const PanelSchema& schema) {
  struct Meta {
    Group group;
    Frequency frequency;
    std::vector<int> release_weeks;
    Transform transform;
  };
  std::map<std::string, Meta> meta;
  std::vector<std::string> order;
  {
    const auto t = csv::read(metadata_csv);
    const auto c_id = t.column("series_id");
    const auto c_group = t.column("group");
    const auto c_freq = t.column("frequency");
    const bool has_release = t.has_column("release_week");
    const bool has_transform = t.has_column("transform");
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const auto& row = t.rows[r];
      Meta m;
      try {
        m.group = parse_group(row[c_group]);
        m.frequency = parse_frequency(row[c_freq]);
        if (has_transform) m.transform = Transform::parse(row[t.column("transform")]);
      } catch (const Error& e) {
        throw SchemaError("metadata row " + std::to_string(t.lines[r]) + ": " + e.what());
      }
      if (has_release) m.release_weeks = parse_release_weeks(row[t.column("release_week")], t.lines[r]);
      if (row[c_id].empty()) throw ParseError("empty series_id", t.lines[r]);
      if (!meta.emplace(row[c_id], m).second) {
        throw ValidationError("metadata lists series '" + row[c_id] + "' twice");
      }
      order.push_back(row[c_id]);
    }
  }
  std::string target_id;
  for (const auto& id : order) {
    if (meta[id].group != Group::target) continue;
    if (!target_id.empty()) throw SchemaError("metadata declares more than one target series");
    target_id = id;
  }
  if (target_id.empty()) throw SchemaError("metadata declares no target series");
  if (meta[target_id].frequency != Frequency::quarterly) {
    throw SchemaError("target series '" + target_id + "' must be quarterly");
  }

  struct Cell {
    double sum = 0.0;
    int count = 0;
    bool merged = false;
    bool regular = false;
  };
  std::map<std::string, std::map<std::int64_t, Cell>> cells;
  std::set<std::pair<std::string, std::int32_t>> seen;
  {
    const auto t = csv::read(data_csv);
    const auto c_date = t.column(schema.date_column);
    const auto c_id = t.column(schema.series_column);
    const auto c_val = t.column(schema.value_column);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const auto& row = t.rows[r];
      const std::size_t line = t.lines[r];
      const auto it = meta.find(row[c_id]);
      if (it == meta.end()) {
        throw SchemaError("row " + std::to_string(line) + ": series '" + row[c_id] +
                          "' is not declared in the metadata");
      }
      const auto ymd = parse_iso_date(row[c_date], line);
      const auto day_num = static_cast<std::int32_t>(chr::sys_days{ymd}.time_since_epoch().count());
      if (!seen.emplace(row[c_id], day_num).second) {
        throw ValidationError("row " + std::to_string(line) + ": duplicate date " + row[c_date] +
                              " for series '" + row[c_id] + "'");
      }
      const std::string vs = lower(row[c_val]);
      if (vs.empty() || vs == "na" || vs == "nan" || vs == "null") continue;
      double v = 0.0;
      if (!csv::parse_double(row[c_val], v) || !std::isfinite(v)) {
        throw ParseError("invalid value '" + row[c_val] + "'", line);
      }
      const Quarter q = quarter_of_date(ymd);
      const Frequency f = it->second.frequency;
      int sub = 1;
      bool overflow = false;
      if (f == Frequency::monthly) {
        sub = static_cast<int>((static_cast<unsigned>(ymd.month()) - 1) % 3) + 1;
      } else if (f == Frequency::weekly) {
        const auto offset = (chr::sys_days{ymd} - quarter_start(q)).count();
        sub = static_cast<int>(offset / 7) + 1;
        if (sub > kWeeksPerQuarter) {
          sub = kWeeksPerQuarter;
          overflow = true;
        }
      }
      Cell& cell = cells[row[c_id]][period_index(f, q, sub)];
      if (cell.count > 0) {
        // Only a trailing partial week may share week 13 with a regular date.
        const bool mergeable = f == Frequency::weekly && (overflow ? !cell.merged : !cell.regular);
        if (!mergeable) {
          throw SchemaError("row " + std::to_string(line) + ": series '" + row[c_id] + "' has two " +
                            std::string(to_string(f)) + " observations in the same period (" +
                            row[c_date] + "); check its declared frequency");
        }
      }
      cell.sum += v;
      ++cell.count;
      (overflow ? cell.merged : cell.regular) = true;
    }
  }

  auto build = [&](const std::string& id) {
    const Meta& m = meta.at(id);
    std::vector<Observation> obs;
    if (auto it = cells.find(id); it != cells.end()) {
      for (const auto& [period, cell] : it->second) {
        obs.push_back({period, cell.sum / cell.count});
      }
    }
    Series s = make_series(id, m.group, m.frequency, std::move(obs), m.release_weeks);
    return apply_transform(s, m.transform);
  };

  Series target = build(target_id);
  std::vector<Series> predictors;
  for (const auto& id : order) {
    if (id != target_id) predictors.push_back(build(id));
  }
  return make_panel(std::move(target), std::move(predictors), schema.first, schema.last);
}

void save_panel(const Panel& panel, const std::filesystem::path& data_csv,
                const std::filesystem::path& metadata_csv) {
  std::ofstream meta(metadata_csv);
  std::ofstream data(data_csv);
  if (!meta || !data) throw DataError("cannot write panel files");
  const std::vector<std::string> mh{"series_id", "group", "frequency", "release_week"};
  csv::write_row(meta, mh);
  const std::vector<std::string> dh{"date", "series_id", "value"};
  csv::write_row(data, dh);

  auto emit = [&](const Series& s) {
    const std::vector<std::string> mr{s.id, std::string(to_string(s.group)),
                                      std::string(to_string(s.frequency)), join_weeks(s.release_weeks)};
    csv::write_row(meta, mr);
    for (const auto& o : s.values) {
      const std::vector<std::string> dr{
          period_start_date(s.frequency, quarter_of(s.frequency, o.period),
                            sub_period_of(s.frequency, o.period)),
          s.id, csv::format_double(o.value)};
      csv::write_row(data, dr);
    }
  };
  emit(panel.target);
  for (const auto& s : panel.predictors) emit(s);
  if (!meta || !data) throw DataError("error while writing panel files");
}

}  // namespace ramsel
