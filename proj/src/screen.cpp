#include "ramsel/screen.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "ramsel/error.hpp"
#include "ramsel/parallel.hpp"

namespace ramsel {

ScreenConfig ScreenConfig::from_tau(double tau) {
  if (!(tau > 0.0 && tau < 1.0)) {
    throw ConfigError("screening tau must lie in (0,1), got " + std::to_string(tau));
  }
  return ScreenConfig(tau, normal_quantile(1.0 - tau));
}

ScreenConfig ScreenConfig::from_lambda(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ConfigError("screening lambda must be positive and finite");
  }
  return ScreenConfig(std::nullopt, lambda);
}

Screener::Screener(const Vector& y, const Matrix& officials) : y_(y), officials_(officials) {
  const Eigen::Index t = y.size();
  const Eigen::Index n1 = officials.cols();
  if (officials.rows() != t) {
    throw DataError("screen: officials have " + std::to_string(officials.rows()) +
                    " rows but y has " + std::to_string(t));
  }
  if (t <= n1 + 1) {
    throw InsufficientSampleError("screen: need T > N1 + 1 (T=" + std::to_string(t) +
                                  ", N1=" + std::to_string(n1) + ")");
  }
  y_norm_sq_ = y.squaredNorm();
  if (n1 == 0) {
    q_.resize(t, 0);
    y_resid_ = y;
    gram_.resize(0, 0);
    return;
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(officials);
  if (qr.rank() < n1) {
    throw SingularDesignError("screen: official regressors are rank deficient");
  }
  q_ = qr.householderQ() * Matrix::Identity(t, n1);
  y_resid_ = y - q_ * (q_.transpose() * y);
  gram_ = officials.transpose() * officials;
}

double Screener::tstat(const Eigen::Ref<const Vector>& candidate) const {
  const Eigen::Index t = y_.size();
  const Eigen::Index n1 = officials_.cols();
  if (candidate.size() != t) {
    throw DataError("screen: candidate length does not match y");
  }

  // Equilibrated Gram of [officials | candidate] for the conditioning guard.
  Matrix g(n1 + 1, n1 + 1);
  g.topLeftCorner(n1, n1) = gram_;
  const Vector cross = officials_.transpose() * candidate;
  g.topRightCorner(n1, 1) = cross;
  g.bottomLeftCorner(1, n1) = cross.transpose();
  g(n1, n1) = candidate.squaredNorm();
  if (!(g(n1, n1) > 0.0)) {
    throw SingularDesignError("screen: candidate column is identically zero");
  }
  const Vector d = g.diagonal().cwiseSqrt().cwiseInverse();
  g = d.asDiagonal() * g * d.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(g, Eigen::EigenvaluesOnly);
  const double lmin = eig.eigenvalues().minCoeff();
  const double lmax = eig.eigenvalues().maxCoeff();
  if (!(lmin > 0.0) || lmax / lmin > kScreenConditionLimit) {
    throw SingularDesignError("screen: design [officials | candidate] is singular or "
                              "ill-conditioned");
  }

  // Frisch-Waugh-Lovell: the candidate coefficient equals the slope of the
  // residualized y on the residualized candidate.
  Vector x_resid = candidate;
  if (n1 > 0) x_resid -= q_ * (q_.transpose() * candidate);
  const double sxx = x_resid.squaredNorm();
  const double sxy = x_resid.dot(y_resid_);
  const double slope = sxy / sxx;
  const double rss = (y_resid_ - slope * x_resid).squaredNorm();

  const double tiny = 1e-20 * std::max(y_norm_sq_, std::numeric_limits<double>::min());
  if (rss <= tiny) {
    // Perfect fit: the statistic diverges unless y is already explained by
    // the officials, in which case the candidate carries nothing.
    if (y_resid_.squaredNorm() <= tiny) return 0.0;
    return std::numeric_limits<double>::infinity();
  }
  const double dof = static_cast<double>(t - n1 - 1);
  const double sigma2 = rss / dof;
  return slope / std::sqrt(sigma2 / sxx);
}

std::vector<double> Screener::tstats(const Matrix& candidates, unsigned threads,
                                     std::vector<std::size_t>* skipped) const {
  const auto n = static_cast<std::size_t>(candidates.cols());
  std::vector<double> out(n, std::numeric_limits<double>::quiet_NaN());
  std::vector<char> bad(n, 0);
  parallel_for(n, threads, [&](std::size_t j) {
    try {
      out[j] = tstat(candidates.col(static_cast<Eigen::Index>(j)));
    } catch (const SingularDesignError&) {
      bad[j] = 1;
    }
  });
  if (skipped != nullptr) {
    skipped->clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (bad[j] != 0) skipped->push_back(j);
    }
  }
  return out;
}

double tstat_single(const Vector& y, const Matrix& officials, const Vector& candidate) {
  return Screener(y, officials).tstat(candidate);
}

std::vector<std::size_t> select_above(std::span<const double> tstats, double lambda) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < tstats.size(); ++j) {
    if (std::abs(tstats[j]) > lambda) out.push_back(j);
  }
  return out;
}

ScreenResult screen(const Vector& y, const Matrix& officials, const Matrix& candidates,
                    const ScreenConfig& cfg, unsigned threads) {
  if (candidates.rows() != y.size()) {
    throw DataError("screen: candidates have " + std::to_string(candidates.rows()) +
                    " rows but y has " + std::to_string(y.size()));
  }
  ScreenResult res;
  res.lambda = cfg.lambda();
  Screener screener(y, officials);
  res.tstats = screener.tstats(candidates, threads, &res.skipped);
  res.selected = select_above(res.tstats, res.lambda);
  return res;
}

}  // namespace ramsel
