#pragma once

// Per-step error metrics over a set of forecast origins. Rows are origins,
// columns are horizon steps.

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "gridcast/error.hpp"

namespace gridcast {

using ForecastMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline std::vector<double> mae_per_step(const ForecastMatrix& forecasts, const ForecastMatrix& actuals) {
  require(forecasts.rows() == actuals.rows() && forecasts.cols() == actuals.cols(), Errc::ShapeMismatch,
          "forecast and actual matrices differ in shape");
  require(forecasts.rows() >= 1 && forecasts.cols() >= 1, Errc::Empty, "no forecasts");
  const auto M = forecasts.rows();
  std::vector<double> out(static_cast<std::size_t>(forecasts.cols()), 0.0);
  for (Eigen::Index k = 0; k < forecasts.cols(); ++k) {
    double s = 0.0;
    for (Eigen::Index m = 0; m < M; ++m) s += std::abs(forecasts(m, k) - actuals(m, k));
    out[static_cast<std::size_t>(k)] = s / static_cast<double>(M);
  }
  return out;
}

/// Sample variance (N-1) of the signed errors forecast - actual at each step;
/// with `absolute` set, of |forecast - actual| instead.
inline std::vector<double> error_variance_per_step(const ForecastMatrix& forecasts, const ForecastMatrix& actuals,
                                                   bool absolute = false) {
  require(forecasts.rows() == actuals.rows() && forecasts.cols() == actuals.cols(), Errc::ShapeMismatch,
          "forecast and actual matrices differ in shape");
  require(forecasts.rows() >= 2, Errc::TooFewForecasts, "variance needs at least two forecasts");
  const auto M = forecasts.rows();
  std::vector<double> out(static_cast<std::size_t>(forecasts.cols()), 0.0);
  for (Eigen::Index k = 0; k < forecasts.cols(); ++k) {
    auto err = [&](Eigen::Index m) {
      const double e = forecasts(m, k) - actuals(m, k);
      return absolute ? std::abs(e) : e;
    };
    double mean = 0.0;
    for (Eigen::Index m = 0; m < M; ++m) mean += err(m);
    mean /= static_cast<double>(M);
    double ss = 0.0;
    for (Eigen::Index m = 0; m < M; ++m) ss += (err(m) - mean) * (err(m) - mean);
    out[static_cast<std::size_t>(k)] = ss / static_cast<double>(M - 1);
  }
  return out;
}

}  // namespace gridcast
