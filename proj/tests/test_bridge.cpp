#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "ramsel/bridge.hpp"
#include "ramsel/error.hpp"
#include "ramsel/synthetic.hpp"
#include "support.hpp"

using namespace ramsel;

namespace {

Panel example_panel() {
  const std::filesystem::path dir = std::filesystem::path(RAMSEL_SOURCE_DIR) / "data" / "example";
  return load_panel(dir / "panel.csv", dir / "metadata.csv");
}

std::size_t column_of(const WeekDesign& d, const std::string& id) {
  for (std::size_t j = 0; j < d.columns.size(); ++j) {
    if (d.columns[j].series_id == id) return j;
  }
  FAIL("no column " << id);
  return 0;
}

NowcastConfig base_config(const Panel& p) {
  NowcastConfig cfg;
  cfg.oos_start = p.first + (cfg.min_training_quarters + cfg.training_gap - 1);
  return cfg;
}

}  // namespace

TEST_CASE("calendar presets") {
  const Panel p = testing::small_panel(1, 20, 3);
  const auto ea = ReleaseCalendar::preset(CalendarPreset::ea, p);
  CHECK(*ea.find("soft1") == std::vector<ReleaseEntry>{{1, 5}, {2, 9}, {3, 13}});
  CHECK(*ea.find("hard1") == std::vector<ReleaseEntry>{{1, 11}});
  CHECK(ea.find("alt1")->size() == 13);
  CHECK(ea.released("soft1", 4).empty());
  CHECK(ea.released("soft1", 9) == std::vector<int>{1, 2});
  CHECK_FALSE(ea.active("hard1", 10));
  CHECK(ea.active("hard1", 11));
  CHECK(ea.released("alt1", 6) == std::vector<int>{1, 2, 3, 4, 5, 6});
  CHECK(*ReleaseCalendar::preset(CalendarPreset::us, p).find("hard1") == std::vector<ReleaseEntry>{{1, 7}});
  CHECK(*ReleaseCalendar::preset(CalendarPreset::de, p).find("hard1") == std::vector<ReleaseEntry>{{1, 10}});
  CHECK(parse_calendar_preset("us") == CalendarPreset::us);
  CHECK_THROWS_AS(parse_calendar_preset("fr"), ConfigError);

  ReleaseCalendar bad = ea;
  bad.set("soft1", {{1, 9}, {2, 5}});
  CHECK_THROWS_AS(bad.validate(p), ValidationError);
  bad.set("soft1", {{1, 14}});
  CHECK_THROWS_AS(bad.validate(p), ValidationError);
  bad = ea;
  bad.set("nope", {{1, 3}});
  CHECK_THROWS_AS(bad.validate(p), ValidationError);
}

TEST_CASE("calendar files override presets") {
  const Panel p = testing::small_panel(2, 20, 3);
  const auto path = std::filesystem::temp_directory_path() / "ramsel_test_calendar.csv";
  {
    std::ofstream out(path);
    out << "series_id,sub_period,week\nhard1,1,7\nhard1,2,12\n";
  }
  auto cal = ReleaseCalendar::preset(CalendarPreset::ea, p);
  cal.merge_csv(path);
  std::filesystem::remove(path);
  CHECK(*cal.find("hard1") == std::vector<ReleaseEntry>{{1, 7}, {2, 12}});
  CHECK(*cal.find("soft1") == std::vector<ReleaseEntry>{{1, 5}, {2, 9}, {3, 13}});
  CHECK_NOTHROW(cal.validate(p));
}

TEST_CASE("week designs") {
  const Panel p = testing::small_panel(3, 20, 3);
  const auto cal = ReleaseCalendar::preset(CalendarPreset::ea, p);
  const auto qs = p.quarters();

  SUBCASE("weekly series average weeks 1..w") {
    const WeekDesign d = build_week_design(p, cal, 3, qs);
    const std::size_t j = column_of(d, "alt1");
    const Series& s = *p.find("alt1");
    for (std::size_t r = 0; r < qs.size(); ++r) {
      double sum = 0.0;
      for (int w = 1; w <= 3; ++w) sum += *s.at(period_index(Frequency::weekly, qs[r], w));
      CHECK(d.x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) ==
            doctest::Approx(sum / 3.0).epsilon(1e-15));
    }
    CHECK(d.columns[0].series_id == kInterceptId);
    CHECK(d.x.col(0).isOnes());
  }

  SUBCASE("ragged edge masks at week 4") {
    const WeekDesign d = build_week_design(p, cal, 4, qs);
    const std::size_t s = column_of(d, "soft1");
    const std::size_t h = column_of(d, "hard1");
    CHECK_FALSE(d.active_mask[s]);
    CHECK_FALSE(d.active_mask[h]);
    CHECK(d.x.col(static_cast<Eigen::Index>(s)).isZero());
    CHECK(d.x.col(static_cast<Eigen::Index>(h)).isZero());
    const Group official[] = {Group::soft, Group::hard};
    CHECK(d.active_columns(official).empty());
    const WeekDesign d9 = build_week_design(p, cal, 9, qs);
    const Series& soft = *p.find("soft1");
    const double expect = 0.5 * (*soft.at(period_index(Frequency::monthly, qs[0], 1)) +
                                 *soft.at(period_index(Frequency::monthly, qs[0], 2)));
    CHECK(d9.x(0, static_cast<Eigen::Index>(s)) == doctest::Approx(expect).epsilon(1e-15));
    CHECK_FALSE(d9.active_mask[h]);
    CHECK(build_week_design(p, cal, 11, qs).active_mask[h]);
  }

  SUBCASE("latest aggregation") {
    const WeekDesign d = build_week_design(p, cal, 9, qs, {.official_aggregation = Aggregation::latest});
    const std::size_t s = column_of(d, "soft1");
    CHECK(d.x(2, static_cast<Eigen::Index>(s)) ==
          *p.find("soft1")->at(period_index(Frequency::monthly, qs[2], 2)));
  }

  SUBCASE("constant survey at week 13") {
    std::vector<Series> preds = p.predictors;
    for (auto& s : preds) {
      if (s.id == "soft1") {
        for (auto& o : s.values) o.value = 3.25;
      }
    }
    const Panel c = make_panel(p.target, preds, p.first, p.last);
    const WeekDesign d = build_week_design(c, cal, 13, qs);
    CHECK((d.x.col(static_cast<Eigen::Index>(column_of(d, "soft1"))).array() == 3.25).all());
  }

  SUBCASE("missing observations name series, quarter and week") {
    std::vector<Series> preds = p.predictors;
    for (auto& s : preds) {
      if (s.id == "soft1") {
        const auto drop = period_index(Frequency::monthly, qs[4], 2);
        std::erase_if(s.values, [&](const Observation& o) { return o.period == drop; });
      }
    }
    Panel gap = p;
    gap.predictors = preds;
    CHECK_NOTHROW(build_week_design(gap, cal, 8, qs));
    try {
      build_week_design(gap, cal, 9, qs);
      FAIL("expected DataGapError");
    } catch (const DataGapError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("soft1") != std::string::npos);
      CHECK(msg.find(qs[4].label()) != std::string::npos);
      CHECK(msg.find("week 9") != std::string::npos);
    }
  }

  SUBCASE("nested information") {
    const auto r = testing::check_nested_information(100, 41);
    INFO(r.detail);
    CHECK(r.passed);
    CHECK(r.cases >= 100);
  }
}

TEST_CASE("variants") {
  CHECK(parse_variant("b") == Variant::ridge_after_selection);
  CHECK(parse_variant("officials_only") == Variant::officials_only);
  CHECK(to_string(Variant::alt_only_screened) == "alt_only_screened");
  CHECK_THROWS_AS(parse_variant("e"), ConfigError);
  CHECK(variant_screens(Variant::ridge_after_selection));
  CHECK(variant_screens(Variant::alt_only_screened));
  CHECK_FALSE(variant_screens(Variant::full_no_screen));

  const Panel p = testing::small_panel(4, 20, 3);
  const auto cal = ReleaseCalendar::preset(CalendarPreset::ea, p);
  const WeekDesign d = build_week_design(p, cal, 11, p.quarters());
  const auto off = variant_columns(d, Variant::officials_only);
  CHECK(off.officials == std::vector<std::size_t>{0, column_of(d, "soft1"), column_of(d, "soft2"), column_of(d, "hard1")});
  CHECK(off.candidates.empty());
  const auto alt = variant_columns(d, Variant::alt_only_screened);
  CHECK(alt.officials == std::vector<std::size_t>{0});
  CHECK(alt.candidates.size() == 3);
}

TEST_CASE("recursive nowcasts") {
  SUBCASE("constant target") {
    const Panel p = testing::small_panel(5, 30, 4);
    std::vector<Observation> flat;
    for (const auto& o : p.target.values) flat.push_back({o.period, 0.7});
    const Panel c = make_panel(make_series(p.target.id, Group::target, Frequency::quarterly, flat),
                               p.predictors, p.first, p.last);
    const auto cal = ReleaseCalendar::preset(CalendarPreset::ea, c);
    for (Variant v : {Variant::full_no_screen, Variant::ridge_after_selection, Variant::officials_only}) {
      NowcastConfig cfg = base_config(c);
      cfg.variant = v;
      const NowcastRun run = nowcast_recursive(c, cal, cfg);
      CHECK(run.per_week_rmsfe.maxCoeff() < 1e-6);
      CHECK(((run.nowcasts.array() - 0.7).abs() < 1e-6).all());
    }
  }

  SUBCASE("officials-only matches a hand-built single split") {
    const Panel p = testing::small_panel(6, 40, 4);
    for (int week : {5, 9, 12, 13}) {
      const auto r = testing::check_officials_only_manual(p, p.first + 30, week);
      INFO(r.detail);
      CHECK(r.passed);
    }
  }

  SUBCASE("RMSFE falls through the quarter") {
    // 60 training and 8 evaluation quarters per panel; squared errors pooled
    // over panels to average out sampling noise.
    Vector mse = Vector::Zero(13);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      SyntheticPanelConfig sc;
      sc.first = Quarter(2000, 1);
      sc.last = sc.first + 67;
      sc.seed = seed;
      const Panel p = make_synthetic_panel(sc);
      NowcastConfig cfg;
      cfg.oos_start = p.first + 60;
      const NowcastRun run = nowcast_recursive(p, ReleaseCalendar::preset(CalendarPreset::ea, p), cfg);
      CHECK(run.oos_quarters.size() == 8);
      mse += run.per_week_rmsfe.array().square().matrix();
    }
    const Vector rmsfe = (mse / 10.0).cwiseSqrt();
    INFO(rmsfe.transpose());
    CHECK(rmsfe(12) < 0.6 * rmsfe(0));
    for (int w = 1; w < 13; ++w) CHECK(rmsfe(w) <= 1.05 * rmsfe(w - 1));

    const auto r = testing::check_rmsfe_profile(example_panel());
    INFO(r.detail);
    CHECK(r.passed);
  }

  SUBCASE("single week and accounting") {
    const Panel p = testing::small_panel(7, 24, 4);
    NowcastConfig cfg = base_config(p);
    cfg.weeks = {5};
    const NowcastRun run = nowcast_recursive(p, ReleaseCalendar::preset(CalendarPreset::ea, p), cfg);
    for (int w = 1; w <= 13; ++w) {
      CHECK(std::isnan(run.per_week_rmsfe(w - 1)) == (w != 5));
    }
    const Eigen::Index n = static_cast<Eigen::Index>(run.oos_quarters.size());
    CHECK(n == 24 - 13);
    const Vector err = run.nowcasts.col(4) - run.actuals;
    CHECK(run.per_week_rmsfe(4) == doctest::Approx(std::sqrt(err.squaredNorm() / n)).epsilon(1e-14));
    CHECK((run.alphas.col(4).array() > 0).all());
  }

  SUBCASE("configuration errors") {
    const Panel p = testing::small_panel(8, 24, 4);
    const auto cal = ReleaseCalendar::preset(CalendarPreset::ea, p);
    NowcastConfig cfg = base_config(p);
    cfg.oos_start = p.first + 5;
    CHECK_THROWS_AS(nowcast_recursive(p, cal, cfg), ConfigError);
    cfg = base_config(p);
    cfg.weeks = {0};
    CHECK_THROWS_AS(nowcast_recursive(p, cal, cfg), ConfigError);
    cfg.weeks = {3, 3};
    CHECK_THROWS_AS(nowcast_recursive(p, cal, cfg), ConfigError);
    cfg = base_config(p);
    cfg.training_gap = 0;
    CHECK_THROWS_AS(nowcast_recursive(p, cal, cfg), ConfigError);

    std::vector<Series> alt_only;
    for (const auto& s : p.predictors) {
      if (s.group == Group::alt) alt_only.push_back(s);
    }
    const Panel a = make_panel(p.target, alt_only, p.first, p.last);
    cfg = base_config(a);
    cfg.variant = Variant::officials_only;
    CHECK_THROWS_AS(nowcast_recursive(a, ReleaseCalendar::preset(CalendarPreset::ea, a), cfg), ConfigError);
  }

  SUBCASE("no look-ahead and determinism") {
    const auto look = testing::check_no_lookahead(100, 51);
    INFO(look.detail);
    CHECK(look.passed);
    CHECK(look.cases >= 100);
    const auto det = testing::check_rerun_determinism(20, 52);
    INFO(det.detail);
    CHECK(det.passed);
  }
}

TEST_CASE("variant comparison") {
  const Panel p = testing::small_panel(10, 40, 6);
  const auto cal = ReleaseCalendar::preset(CalendarPreset::ea, p);
  const NowcastConfig base = base_config(p);

  SUBCASE("singleton table equals the run") {
    const Variant v[] = {Variant::ridge_after_selection};
    const VariantTable t = compare_variants(p, cal, v, base);
    const NowcastRun run = nowcast_recursive(p, cal, base);
    CHECK(t.rmsfe.rows() == 1);
    CHECK(t.rmsfe.row(0).transpose() == run.per_week_rmsfe);
    for (bool b : t.is_best[0]) CHECK(b);
  }

  SUBCASE("identical variants give identical rows") {
    const Variant v[] = {Variant::full_no_screen, Variant::full_no_screen};
    const VariantTable t = compare_variants(p, cal, v, base);
    CHECK(t.rmsfe.row(0) == t.rmsfe.row(1));
  }

  SUBCASE("alternative data carrying the signal beats official data") {
    // The quarterly factor shows up in alt1 every week; official series are noise.
    std::mt19937_64 rng(12);
    std::normal_distribution<double> z;
    const Quarter first(2000, 1);
    const int n = 60;
    std::vector<Observation> y;
    std::vector<std::vector<Observation>> alt(4);
    std::vector<Observation> soft;
    std::vector<Observation> hard;
    for (int i = 0; i < n; ++i) {
      const Quarter q = first + i;
      const double f = z(rng);
      y.push_back({q.index(), f + 0.3 * z(rng)});
      for (int w = 1; w <= 13; ++w) {
        const auto per = period_index(Frequency::weekly, q, w);
        alt[0].push_back({per, f + 0.5 * z(rng)});
        for (std::size_t g = 1; g < alt.size(); ++g) alt[g].push_back({per, z(rng)});
      }
      for (int m = 1; m <= 3; ++m) {
        soft.push_back({period_index(Frequency::monthly, q, m), z(rng)});
        hard.push_back({period_index(Frequency::monthly, q, m), z(rng)});
      }
    }
    std::vector<Series> preds{make_series("soft1", Group::soft, Frequency::monthly, soft, {5, 9, 13}),
                              make_series("hard1", Group::hard, Frequency::monthly, hard, {11, 0, 0})};
    for (std::size_t g = 0; g < alt.size(); ++g) {
      preds.push_back(make_series("alt" + std::to_string(g + 1), Group::alt, Frequency::weekly, alt[g]));
    }
    const Panel s = make_panel(make_series("y", Group::target, Frequency::quarterly, y), preds);
    const Variant v[] = {Variant::alt_only_screened, Variant::alt_only_no_screen, Variant::officials_only};
    const VariantTable t = compare_variants(s, ReleaseCalendar::preset(CalendarPreset::ea, s), v, base_config(s));
    INFO(format_rmsfe_table(t));
    for (int k = 0; k < 2; ++k) {
      int wins = 0;
      for (int w = 0; w < 13; ++w) wins += t.rmsfe(k, w) < t.rmsfe(2, w);
      CHECK(wins >= 11);
    }
  }

  SUBCASE("outputs") {
    const Variant v[] = {Variant::ridge_after_selection, Variant::officials_only};
    const VariantTable t = compare_variants(p, cal, v, base);
    std::ostringstream csv;
    write_rmsfe_csv(csv, t);
    const std::string text = csv.str();
    CHECK(text.rfind("variant,M1,", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
    const std::string table = format_rmsfe_table(t);
    CHECK(table.find('*') != std::string::npos);
    std::ostringstream paths;
    write_nowcast_paths_csv(paths, t);
    const std::string ptext = paths.str();
    CHECK(std::count(ptext.begin(), ptext.end(), '\n') == 1 + 2 * 13 * static_cast<long>(t.runs[0].oos_quarters.size()));
  }
}
