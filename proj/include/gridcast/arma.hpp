#pragma once

// ARMA(p, q) baseline: Hannan-Rissanen estimation, AIC order selection and
// recursive multi-step forecasting.
//
//   x_t = c + sum_i phi_i x_{t-i} + sum_j theta_j e_{t-j} + e_t

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gridcast/data.hpp"
#include "gridcast/error.hpp"

namespace gridcast {

struct ArmaModel {
  std::size_t p = 0;
  std::size_t q = 0;
  std::vector<double> phi;
  std::vector<double> theta;
  double intercept = 0.0;
  double noise_variance = 0.0;
  std::size_t long_ar_order = 0;
  std::size_t effective_samples = 0;  // rows of the second-stage regression
  std::vector<double> tail_values;     // oldest first
  std::vector<double> tail_residuals;  // oldest first
  bool near_unit_root = false;

  /// Process mean c / (1 - sum phi); infinite for a unit root.
  double process_mean() const {
    double s = 0.0;
    for (double v : phi) s += v;
    return intercept / (1.0 - s);
  }

  friend bool operator==(const ArmaModel&, const ArmaModel&) = default;
};

namespace detail {

// Least squares with a rank check; columns of `X` must be linearly independent.
inline Eigen::VectorXd least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < X.cols()) {
    fail(Errc::SingularNormalEquations,
         "regressors are collinear (rank " + std::to_string(qr.rank()) + " of " +
             std::to_string(X.cols()) + ")");
  }
  return qr.solve(y);
}

// Roots of 1 - phi_1 z - ... - phi_p z^p are reciprocals of the companion
// matrix eigenvalues, so |root| <= r  <=>  |eigenvalue| >= 1/r.
inline bool has_root_within(std::span<const double> phi, double radius) {
  const auto p = static_cast<Eigen::Index>(phi.size());
  if (p == 0) return false;
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) companion(0, i) = phi[static_cast<std::size_t>(i)];
  for (Eigen::Index i = 1; i < p; ++i) companion(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(companion, false);
  for (Eigen::Index i = 0; i < p; ++i) {
    if (std::abs(es.eigenvalues()(i)) >= 1.0 / radius) return true;
  }
  return false;
}

}  // namespace detail

inline std::size_t arma_long_order(std::size_t p, std::size_t q) { return std::max<std::size_t>(20, 2 * (p + q)); }

/// Two-stage least squares: a long AR(m) supplies residual proxies, then x_t is
/// regressed on p lags of x and q lags of the proxies.
inline ArmaModel fit_arma(std::span<const double> x, std::size_t p, std::size_t q) {
  require(p + q >= 1, Errc::InvalidArgument, "ARMA needs p + q >= 1");
  const std::size_t N = x.size();
  require(N >= 10 * (p + q + 1), Errc::SeriesTooShort,
          "ARMA(" + std::to_string(p) + "," + std::to_string(q) + ") needs at least " +
              std::to_string(10 * (p + q + 1)) + " samples");

  const std::size_t m = arma_long_order(p, q);
  std::vector<double> proxy(N, 0.0);
  if (q > 0) {
    require(N > 2 * m + 1, Errc::SeriesTooShort,
            "long AR(" + std::to_string(m) + ") stage needs more than " + std::to_string(2 * m + 1) + " samples");
    const auto rows = static_cast<Eigen::Index>(N - m);
    Eigen::MatrixXd X(rows, static_cast<Eigen::Index>(m + 1));
    Eigen::VectorXd y(rows);
    for (std::size_t t = m; t < N; ++t) {
      const auto r = static_cast<Eigen::Index>(t - m);
      X(r, 0) = 1.0;
      for (std::size_t i = 1; i <= m; ++i) X(r, static_cast<Eigen::Index>(i)) = x[t - i];
      y(r) = x[t];
    }
    const Eigen::VectorXd resid = y - X * detail::least_squares(X, y);
    for (std::size_t t = m; t < N; ++t) proxy[t] = resid(static_cast<Eigen::Index>(t - m));
  }

  const std::size_t start = q > 0 ? std::max(p, m + q) : p;
  const std::size_t cols = 1 + p + q;
  require(N > start + cols, Errc::SeriesTooShort, "too few rows for the second-stage regression");
  const auto rows = static_cast<Eigen::Index>(N - start);
  Eigen::MatrixXd X(rows, static_cast<Eigen::Index>(cols));
  Eigen::VectorXd y(rows);
  for (std::size_t t = start; t < N; ++t) {
    const auto r = static_cast<Eigen::Index>(t - start);
    X(r, 0) = 1.0;
    for (std::size_t i = 1; i <= p; ++i) X(r, static_cast<Eigen::Index>(i)) = x[t - i];
    for (std::size_t j = 1; j <= q; ++j) X(r, static_cast<Eigen::Index>(p + j)) = proxy[t - j];
    y(r) = x[t];
  }
  const Eigen::VectorXd coef = detail::least_squares(X, y);
  const Eigen::VectorXd resid = y - X * coef;

  ArmaModel model;
  model.p = p;
  model.q = q;
  model.intercept = coef(0);
  for (std::size_t i = 0; i < p; ++i) model.phi.push_back(coef(static_cast<Eigen::Index>(1 + i)));
  for (std::size_t j = 0; j < q; ++j) model.theta.push_back(coef(static_cast<Eigen::Index>(1 + p + j)));
  model.noise_variance = resid.squaredNorm() / static_cast<double>(rows);
  model.long_ar_order = m;
  model.effective_samples = static_cast<std::size_t>(rows);

  const std::size_t keep = std::min(N, std::max(p, m));
  model.tail_values.assign(x.end() - static_cast<std::ptrdiff_t>(keep), x.end());
  for (std::size_t j = q; j > 0; --j) model.tail_residuals.push_back(resid(rows - static_cast<Eigen::Index>(j)));

  model.near_unit_root = detail::has_root_within(model.phi, 1.02);
  return model;
}

inline ArmaModel fit_arma(const TimeSeries& train, std::size_t p, std::size_t q) {
  return fit_arma(train.values(), p, q);
}

/// AIC = N ln(sigma^2) + 2 (p + q + 1) over 0..p_max x 0..q_max (p + q >= 1).
/// Candidates that fail to fit are skipped; ties keep the smaller model.
inline std::pair<std::size_t, std::size_t> select_order(std::span<const double> x, std::size_t p_max,
                                                        std::size_t q_max) {
  require(p_max <= 5 && q_max <= 5, Errc::InvalidArgument, "order search is limited to 5");
  double best_aic = std::numeric_limits<double>::infinity();
  std::pair<std::size_t, std::size_t> best{0, 0};
  bool found = false;
  // increasing total order first, so equal AIC prefers fewer parameters
  for (std::size_t total = 1; total <= p_max + q_max; ++total) {
    for (std::size_t p = std::min(total, p_max) + 1; p-- > 0;) {
      const std::size_t q = total - p;
      if (q > q_max) continue;
      try {
        const ArmaModel m = fit_arma(x, p, q);
        const double aic = static_cast<double>(m.effective_samples) * std::log(m.noise_variance) +
                           2.0 * static_cast<double>(p + q + 1);
        if (std::isnan(aic)) continue;
        if (!found || aic < best_aic) {
          best_aic = aic;
          best = {p, q};
          found = true;
        }
      } catch (const Error&) {
        continue;
      }
    }
  }
  if (!found) fail(Errc::NoFeasibleOrder, "no ARMA candidate could be fitted");
  return best;
}

inline std::pair<std::size_t, std::size_t> select_order(const TimeSeries& train, std::size_t p_max,
                                                        std::size_t q_max) {
  return select_order(train.values(), p_max, q_max);
}

namespace detail {

inline std::vector<double> arma_recurse(const ArmaModel& model, std::vector<double> xs,
                                        std::vector<double> es, std::size_t h) {
  // xs, es: observed values and residuals, oldest first; es aligned with xs' tail
  std::vector<double> out;
  out.reserve(h);
  for (std::size_t s = 0; s < h; ++s) {
    double v = model.intercept;
    for (std::size_t i = 1; i <= model.p; ++i) v += model.phi[i - 1] * xs[xs.size() - i];
    for (std::size_t j = 1; j <= model.q; ++j) {
      const std::size_t back = j;  // e_{t-j}, zero once it refers to the future
      if (back <= s) continue;
      v += model.theta[j - 1] * es[es.size() - (back - s)];
    }
    xs.push_back(v);
    out.push_back(v);
  }
  return out;
}

}  // namespace detail

/// Forecast h steps past the end of the training data, seeded from the stored
/// tail buffers.
inline std::vector<double> arma_forecast(const ArmaModel& model, std::size_t h) {
  require(h >= 1, Errc::InvalidArgument, "horizon must be >= 1");
  require(model.tail_values.size() >= model.p && model.tail_residuals.size() >= model.q,
          Errc::InsufficientHistory, "model tail buffers are too short");
  return detail::arma_recurse(model, model.tail_values, model.tail_residuals, h);
}

/// Forecast h steps past `history`. Residuals are recovered by running the
/// model filter over the history, with pre-sample residuals taken as zero.
inline std::vector<double> arma_forecast(const ArmaModel& model, std::span<const double> history,
                                         std::size_t h) {
  require(h >= 1, Errc::InvalidArgument, "horizon must be >= 1");
  require(history.size() >= std::max<std::size_t>(model.p, 1), Errc::InsufficientHistory,
          "need at least " + std::to_string(std::max<std::size_t>(model.p, 1)) + " history values");
  std::vector<double> es(history.size(), 0.0);
  for (std::size_t t = model.p; t < history.size(); ++t) {
    double fit = model.intercept;
    for (std::size_t i = 1; i <= model.p; ++i) fit += model.phi[i - 1] * history[t - i];
    for (std::size_t j = 1; j <= model.q && j <= t; ++j) fit += model.theta[j - 1] * es[t - j];
    es[t] = history[t] - fit;
  }
  std::vector<double> xs(history.begin(), history.end());
  if (es.size() < model.q) es.insert(es.begin(), model.q - es.size(), 0.0);
  return detail::arma_recurse(model, std::move(xs), std::move(es), h);
}

}  // namespace gridcast
