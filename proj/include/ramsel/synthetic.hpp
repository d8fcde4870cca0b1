#pragma once

#include <cstdint>

#include "ramsel/dataset.hpp"

namespace ramsel {

/// Mixed-frequency panel with a known generating model. Each quarter has
/// thirteen weekly factors f_k ~ N(0,1) and
///   y = mean_level + target_loading * sum_k f_k / sqrt(13) + target_noise * e.
/// Informative weekly series observe f_k with noise, the remaining weekly
/// series are pure noise, and monthly soft/hard series observe the monthly
/// average of the factors with noise. Soft series are released in weeks
/// 5/9/13, hard series release month 1 in week 11.
struct SyntheticPanelConfig {
  Quarter first{1995, 1};
  Quarter last{2019, 4};
  int soft = 2;
  int hard = 1;
  int alt_informative = 5;
  int alt_noise = 15;
  double mean_level = 0.5;
  double target_loading = 1.0;
  double target_noise = 0.2;
  double alt_noise_scale = 0.5;
  double official_noise_scale = 0.8;
  std::uint64_t seed = 1;
};

Panel make_synthetic_panel(const SyntheticPanelConfig& cfg);

}  // namespace ramsel
