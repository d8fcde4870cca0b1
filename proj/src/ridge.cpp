#include "ramsel/ridge.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <string>

#include "ramsel/error.hpp"
#include "ramsel/log.hpp"

namespace ramsel {
namespace {

void check_shapes(const Matrix& x, const Vector& y) {
  if (x.rows() != y.size()) {
    throw DataError("ridge: design has " + std::to_string(x.rows()) + " rows but y has " +
                    std::to_string(y.size()));
  }
  if (x.rows() < 1 || x.cols() < 1) {
    throw DataError("ridge: empty design");
  }
}

bool is_ones(const Eigen::Ref<const Vector>& c) {
  return (c.array() == 1.0).all();
}

std::string fmt_alpha(double a) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", a);
  return buf;
}

}  // namespace

void AlphaGrid::validate() const {
  if (!(lo > 0.0) || !(hi > lo) || !std::isfinite(hi)) {
    throw ConfigError("alpha grid needs 0 < lo < hi");
  }
  if (count < 2) {
    throw ConfigError("alpha grid needs at least two points");
  }
}

std::vector<double> AlphaGrid::points() const {
  validate();
  std::vector<double> out(static_cast<std::size_t>(count));
  const double n = static_cast<double>(count - 1);
  for (int i = 0; i < count; ++i) {
    const double f = static_cast<double>(i) / n;
    out[static_cast<std::size_t>(i)] =
        spacing == GridSpacing::log ? std::exp(std::log(lo) + f * (std::log(hi) - std::log(lo)))
                                    : lo + f * (hi - lo);
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

Vector ridge_solve(const Matrix& x, const Vector& y, double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw DomainError("ridge_solve: alpha must be positive, got " + fmt_alpha(alpha));
  }
  check_shapes(x, y);
  const double t = static_cast<double>(x.rows());
  if (x.cols() <= x.rows()) {
    Matrix a = x.transpose() * x / t;
    a.diagonal().array() += alpha;
    return a.llt().solve(x.transpose() * y / t);
  }
  // Dual form: X'(XX'/T + alpha I)^{-1} y / T.
  Matrix k = x * x.transpose() / t;
  k.diagonal().array() += alpha;
  return x.transpose() * k.llt().solve(y) / t;
}

double gcv(const Matrix& x, const Vector& y, double alpha) {
  return RidgePath(x, y, RidgeOptions{.standardize = false, .penalize_intercept = true}).gcv(alpha);
}

RidgePath::RidgePath(const Matrix& x, const Vector& y, RidgeOptions options)
    : t_(x.rows()), p_(x.cols()), options_(options) {
  check_shapes(x, y);
  for (Eigen::Index j = 0; j < p_; ++j) {
    if (is_ones(x.col(j))) {
      intercept_ = j;
      break;
    }
  }
  decoupled_ = intercept_.has_value() && (options_.standardize || !options_.penalize_intercept);
  const double t = static_cast<double>(t_);

  for (Eigen::Index j = 0; j < p_; ++j) {
    if (decoupled_ && intercept_ == j) continue;
    core_cols_.push_back(j);
  }
  const auto q = static_cast<Eigen::Index>(core_cols_.size());
  center_ = Vector::Zero(q);
  scale_ = Vector::Ones(q);
  Matrix w(t_, q);
  for (Eigen::Index k = 0; k < q; ++k) {
    const auto col = x.col(core_cols_[static_cast<std::size_t>(k)]);
    if (decoupled_) center_(k) = col.mean();
    if (options_.standardize) {
      const double var = (col.array() - center_(k)).square().sum() / t;
      const double mag = std::max(std::abs(center_(k)), col.cwiseAbs().maxCoeff());
      scale_(k) = var > 1e-24 * std::max(mag * mag, 1e-300) ? std::sqrt(var) : 0.0;
    }
    if (scale_(k) == 0.0) {
      w.col(k).setZero();
    } else {
      w.col(k) = (col.array() - center_(k)) / scale_(k);
    }
  }

  Vector y_core = y;
  if (decoupled_) {
    y_mean_ = y.mean();
    y_core.array() -= y_mean_;
  }
  if (q == 0) {
    u_.resize(t_, 0);
    d_.resize(0);
    v_.resize(0, 0);
    uty_.resize(0);
    resid_perp_sq_ = y_core.squaredNorm();
    return;
  }
  Eigen::BDCSVD<Matrix> svd(w, Eigen::ComputeThinU | Eigen::ComputeThinV);
  u_ = svd.matrixU();
  d_ = svd.singularValues();
  v_ = svd.matrixV();
  uty_ = u_.transpose() * y_core;
  resid_perp_sq_ = (y_core - u_ * uty_).squaredNorm();
}

void RidgePath::check_alpha(double alpha) const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw DomainError("ridge: alpha must be positive, got " + fmt_alpha(alpha));
  }
}

double RidgePath::intercept_factor(double alpha) const {
  if (!decoupled_) return 0.0;
  return options_.penalize_intercept ? 1.0 / (1.0 + alpha) : 1.0;
}

double RidgePath::trace_hat(double alpha) const {
  check_alpha(alpha);
  const double ta = static_cast<double>(t_) * alpha;
  double tr = intercept_factor(alpha);
  for (Eigen::Index i = 0; i < d_.size(); ++i) {
    const double d2 = d_(i) * d_(i);
    tr += d2 / (d2 + ta);
  }
  return tr;
}

double RidgePath::rss(double alpha) const {
  check_alpha(alpha);
  const double ta = static_cast<double>(t_) * alpha;
  CompensatedSum s;
  s.add(resid_perp_sq_);
  for (Eigen::Index i = 0; i < d_.size(); ++i) {
    const double d2 = d_(i) * d_(i);
    const double keep = ta / (d2 + ta);
    s.add(keep * keep * uty_(i) * uty_(i));
  }
  if (decoupled_) {
    const double miss = 1.0 - intercept_factor(alpha);
    s.add(static_cast<double>(t_) * y_mean_ * y_mean_ * miss * miss);
  }
  return s.value();
}

double RidgePath::gcv(double alpha) const {
  check_alpha(alpha);
  const double t = static_cast<double>(t_);
  const double ta = t * alpha;
  // T - tr(H) accumulated from its nonnegative parts.
  CompensatedSum slack;
  slack.add(t - static_cast<double>(d_.size()) - (decoupled_ ? 1.0 : 0.0));
  for (Eigen::Index i = 0; i < d_.size(); ++i) slack.add(ta / (d_(i) * d_(i) + ta));
  if (decoupled_ && options_.penalize_intercept) slack.add(alpha / (1.0 + alpha));
  const double denom_root = slack.value() / t;
  if (!(denom_root > 0.0)) {
    throw NumericalError("gcv: tr(H)/T >= 1 at alpha=" + fmt_alpha(alpha));
  }
  const double value = rss(alpha) / (t * denom_root * denom_root);
  if (!std::isfinite(value)) {
    throw NumericalError("gcv: non-finite criterion at alpha=" + fmt_alpha(alpha));
  }
  return value;
}

Vector RidgePath::coefficients(double alpha) const {
  check_alpha(alpha);
  const double ta = static_cast<double>(t_) * alpha;
  Vector beta = Vector::Zero(p_);
  if (d_.size() > 0) {
    Vector w(d_.size());
    for (Eigen::Index i = 0; i < d_.size(); ++i) {
      w(i) = d_(i) / (d_(i) * d_(i) + ta) * uty_(i);
    }
    const Vector core = v_ * w;
    for (std::size_t k = 0; k < core_cols_.size(); ++k) {
      const auto ki = static_cast<Eigen::Index>(k);
      if (scale_(ki) != 0.0) beta(core_cols_[k]) = core(ki) / scale_(ki);
    }
  }
  if (decoupled_) {
    double b0 = y_mean_ * intercept_factor(alpha);
    for (std::size_t k = 0; k < core_cols_.size(); ++k) {
      b0 -= beta(core_cols_[k]) * center_(static_cast<Eigen::Index>(k));
    }
    beta(*intercept_) = b0;
  }
  return beta;
}

RidgeFit gcv_minimize(const Matrix& x, const Vector& y, std::span<const double> alphas,
                      RidgeOptions options) {
  if (alphas.empty()) throw ConfigError("gcv_minimize: empty alpha grid");
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (!(alphas[i] > 0.0)) throw DomainError("gcv_minimize: alpha must be positive");
    if (i > 0 && !(alphas[i] > alphas[i - 1])) {
      throw ConfigError("gcv_minimize: alpha grid must be strictly increasing");
    }
  }
  const RidgePath path(x, y, options);
  RidgeFit fit;
  fit.options = options;
  fit.gcv_path.reserve(alphas.size());
  std::size_t best = 0;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    const double g = path.gcv(alphas[i]);
    fit.gcv_path.push_back({alphas[i], g});
    if (g <= fit.gcv_path[best].gcv) best = i;
  }
  fit.alpha = fit.gcv_path[best].alpha;
  fit.gcv_value = fit.gcv_path[best].gcv;
  fit.coefficients = path.coefficients(fit.alpha);
  fit.selected.resize(static_cast<std::size_t>(x.cols()));
  std::iota(fit.selected.begin(), fit.selected.end(), std::size_t{0});
  return fit;
}

RidgeFit gcv_minimize(const Matrix& x, const Vector& y, const AlphaGrid& grid,
                      RidgeOptions options) {
  const auto pts = grid.points();
  return gcv_minimize(x, y, pts, options);
}

Matrix take_columns(const Matrix& x, std::span<const std::size_t> idx) {
  Matrix out(x.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    out.col(static_cast<Eigen::Index>(k)) = x.col(static_cast<Eigen::Index>(idx[k]));
  }
  return out;
}

RidgeFit ridge_on_subset(const Vector& y, const Matrix& officials, const Matrix& candidates,
                         std::span<const std::size_t> chosen, std::span<const double> alphas,
                         RidgeOptions options) {
  if (candidates.rows() != y.size() || officials.rows() != y.size()) {
    throw DataError("ridge_on_subset: inconsistent number of observations");
  }
  for (std::size_t c : chosen) {
    if (c >= static_cast<std::size_t>(candidates.cols())) {
      throw DataError("ridge_on_subset: candidate index out of range");
    }
  }
  const Eigen::Index n1 = officials.cols();
  const auto k = static_cast<Eigen::Index>(chosen.size());
  Matrix design(y.size(), n1 + k);
  design.leftCols(n1) = officials;
  for (Eigen::Index c = 0; c < k; ++c) {
    design.col(n1 + c) = candidates.col(static_cast<Eigen::Index>(chosen[static_cast<std::size_t>(c)]));
  }
  RidgeFit reduced = gcv_minimize(design, y, alphas, options);

  RidgeFit fit = std::move(reduced);
  Vector full = Vector::Zero(n1 + candidates.cols());
  full.head(n1) = fit.coefficients.head(n1);
  std::vector<std::size_t> selected;
  for (Eigen::Index j = 0; j < n1; ++j) selected.push_back(static_cast<std::size_t>(j));
  for (Eigen::Index c = 0; c < k; ++c) {
    const auto j = static_cast<Eigen::Index>(chosen[static_cast<std::size_t>(c)]);
    full(n1 + j) = fit.coefficients(n1 + c);
    selected.push_back(static_cast<std::size_t>(n1 + j));
  }
  fit.coefficients = std::move(full);
  fit.selected = std::move(selected);
  return fit;
}

RidgeFit ridge_after_selection(const Vector& y, const Matrix& officials,
                               const Matrix& candidates, const ScreenConfig& screen_cfg,
                               std::span<const double> alphas, RidgeOptions options,
                               unsigned threads) {
  if (candidates.rows() != y.size() || officials.rows() != y.size()) {
    throw DataError("ridge_after_selection: inconsistent number of observations");
  }
  ScreenResult sr;
  sr.lambda = screen_cfg.lambda();
  if (candidates.cols() > 0) {
    sr = screen(y, officials, candidates, screen_cfg, threads);
  }
  if (sr.selected.empty()) {
    log_info("ridge_after_selection: no candidate passed screening; fitting officials only");
  }
  RidgeFit fit = ridge_on_subset(y, officials, candidates, sr.selected, alphas, options);
  fit.screening = std::move(sr);
  return fit;
}

RidgeFit ridge_after_selection(const Vector& y, const Matrix& officials,
                               const Matrix& candidates, const ScreenConfig& screen_cfg,
                               const AlphaGrid& grid, RidgeOptions options, unsigned threads) {
  const auto pts = grid.points();
  return ridge_after_selection(y, officials, candidates, screen_cfg, pts, options, threads);
}

RidgeFit ridge_without_selection(const Vector& y, const Matrix& officials,
                                 const Matrix& candidates, std::span<const double> alphas,
                                 RidgeOptions options) {
  if (candidates.rows() != y.size() || officials.rows() != y.size()) {
    throw DataError("ridge_without_selection: inconsistent number of observations");
  }
  std::vector<std::size_t> all(static_cast<std::size_t>(candidates.cols()));
  std::iota(all.begin(), all.end(), std::size_t{0});
  return ridge_on_subset(y, officials, candidates, all, alphas, options);
}

SupportEigenvalues support_eigenvalues(const Matrix& x, std::span<const std::size_t> support) {
  if (support.empty()) throw DataError("support_eigenvalues: empty support");
  const Matrix xs = take_columns(x, support);
  const Matrix gram = xs.transpose() * xs / static_cast<double>(x.rows());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  SupportEigenvalues out;
  out.kappa_sq = std::max(0.0, eig.eigenvalues().minCoeff());
  out.phi = eig.eigenvalues().maxCoeff();
  out.mu = out.kappa_sq > 0.0 ? std::sqrt(out.phi / out.kappa_sq)
                              : std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace ramsel
