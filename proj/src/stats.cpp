#include "ramsel/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/normal.hpp>

#include "ramsel/error.hpp"

namespace ramsel {

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("normal_quantile: probability must lie in (0,1)");
  }
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

void CompensatedSum::add(double x) noexcept {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    comp_ += (sum_ - t) + x;
  } else {
    comp_ += (x - t) + sum_;
  }
  sum_ = t;
}

MeanSe mean_and_se(std::span<const double> xs) {
  MeanSe out;
  if (xs.empty()) {
    out.mean = std::numeric_limits<double>::quiet_NaN();
    out.se = out.mean;
    return out;
  }
  CompensatedSum s;
  for (double x : xs) s.add(x);
  const double n = static_cast<double>(xs.size());
  out.mean = s.value() / n;
  if (xs.size() < 2) {
    out.se = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  CompensatedSum ss;
  for (double x : xs) ss.add((x - out.mean) * (x - out.mean));
  out.se = std::sqrt(ss.value() / (n - 1.0) / n);
  return out;
}

double median(std::vector<double> xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto mid = xs.begin() + static_cast<std::ptrdiff_t>(xs.size() / 2);
  std::nth_element(xs.begin(), mid, xs.end());
  if (xs.size() % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(xs.begin(), mid);
  return 0.5 * (lo + hi);
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

}  // namespace ramsel
