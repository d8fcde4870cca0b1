#include "ramsel/synthetic.hpp"

#include <array>
#include <cmath>
#include <random>
#include <string>

#include "ramsel/error.hpp"
#include "ramsel/stats.hpp"

namespace ramsel {
namespace {

constexpr std::array<int, 4> kMonthStart{0, 4, 8, 13};

}  // namespace

Panel make_synthetic_panel(const SyntheticPanelConfig& cfg) {
  if (cfg.last < cfg.first) throw ConfigError("synthetic panel: empty quarter range");
  if (cfg.soft < 0 || cfg.hard < 0 || cfg.alt_informative < 0 || cfg.alt_noise < 0) {
    throw ConfigError("synthetic panel: series counts must be nonnegative");
  }
  std::mt19937_64 rng(stream_seed(cfg.seed, 0));
  std::normal_distribution<double> normal;

  const int n_alt = cfg.alt_informative + cfg.alt_noise;
  std::vector<std::vector<Observation>> soft(static_cast<std::size_t>(cfg.soft));
  std::vector<std::vector<Observation>> hard(static_cast<std::size_t>(cfg.hard));
  std::vector<std::vector<Observation>> alt(static_cast<std::size_t>(n_alt));
  std::vector<Observation> target;

  for (Quarter q = cfg.first; q <= cfg.last; q = q + 1) {
    std::array<double, kWeeksPerQuarter> f{};
    double sum = 0.0;
    for (auto& v : f) {
      v = normal(rng);
      sum += v;
    }
    const double y = cfg.mean_level + cfg.target_loading * sum / std::sqrt(13.0) +
                     cfg.target_noise * normal(rng);
    target.push_back({q.index(), y});
    for (int g = 0; g < n_alt; ++g) {
      for (int k = 1; k <= kWeeksPerQuarter; ++k) {
        const double signal = g < cfg.alt_informative ? f[static_cast<std::size_t>(k - 1)] : 0.0;
        const double noise = g < cfg.alt_informative ? cfg.alt_noise_scale : 1.0;
        alt[static_cast<std::size_t>(g)].push_back(
            {period_index(Frequency::weekly, q, k), signal + noise * normal(rng)});
      }
    }
    auto monthly = [&](std::vector<Observation>& out) {
      for (int m = 1; m <= 3; ++m) {
        double avg = 0.0;
        const int lo = kMonthStart[static_cast<std::size_t>(m - 1)];
        const int hi = kMonthStart[static_cast<std::size_t>(m)];
        for (int k = lo; k < hi; ++k) avg += f[static_cast<std::size_t>(k)];
        avg /= static_cast<double>(hi - lo);
        out.push_back({period_index(Frequency::monthly, q, m),
                       avg + cfg.official_noise_scale * normal(rng)});
      }
    };
    for (auto& s : soft) monthly(s);
    for (auto& s : hard) monthly(s);
  }

  std::vector<Series> predictors;
  for (int i = 0; i < cfg.soft; ++i) {
    predictors.push_back(make_series("soft" + std::to_string(i + 1), Group::soft,
                                     Frequency::monthly, std::move(soft[static_cast<std::size_t>(i)]),
                                     {5, 9, 13}));
  }
  for (int i = 0; i < cfg.hard; ++i) {
    predictors.push_back(make_series("hard" + std::to_string(i + 1), Group::hard,
                                     Frequency::monthly, std::move(hard[static_cast<std::size_t>(i)]),
                                     {11, 0, 0}));
  }
  for (int g = 0; g < n_alt; ++g) {
    predictors.push_back(make_series("alt" + std::to_string(g + 1), Group::alt, Frequency::weekly,
                                     std::move(alt[static_cast<std::size_t>(g)])));
  }
  Series y = make_series("gdp", Group::target, Frequency::quarterly, std::move(target), {1});
  return make_panel(std::move(y), std::move(predictors), cfg.first, cfg.last);
}

}  // namespace ramsel
