#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace ramsel {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Inverse of the standard normal CDF. Throws DomainError outside (0,1).
double normal_quantile(double p);

/// Standard normal CDF.
double normal_cdf(double x);

/// Neumaier compensated sum.
class CompensatedSum {
public:
  void add(double x) noexcept;
  double value() const noexcept { return sum_ + comp_; }

private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct MeanSe {
  double mean = 0.0;
  /// Standard error of the mean; NaN when fewer than two samples.
  double se = 0.0;
};

/// Mean and standard error, accumulated in index order with compensation.
MeanSe mean_and_se(std::span<const double> xs);

/// Median of a copy of xs. Empty input yields NaN.
double median(std::vector<double> xs);

/// SplitMix64 finalizer, used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seed for stream `index` of a run seeded with `seed`. Depends only on the pair.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) noexcept;

}  // namespace ramsel
