#pragma once

// epsilon-insensitive support vector regression trained by sequential minimal
// optimization on the signed coefficients beta_i = alpha_i - alpha_i*.
//
// Dual (maximized):
//   D(beta) = sum_i y_i beta_i - eps sum_i |beta_i| - 1/2 beta' K beta
//   s.t. sum_i beta_i = 0, -C <= beta_i <= C
//
// Each SMO step moves one pair (beta_i += t, beta_j -= t) to the exact
// maximizer of the concave piecewise-quadratic restriction of D, so the
// objective never decreases and both constraints hold after every step.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "gridcast/data.hpp"
#include "gridcast/error.hpp"

namespace gridcast {

enum class Kernel { Rbf, Linear };

inline double kernel_rbf(std::span<const double> a, std::span<const double> b, double gamma) {
  require(a.size() == b.size(), Errc::DimensionMismatch, "kernel arguments differ in length");
  require(gamma >= 0.0, Errc::InvalidArgument, "gamma must be >= 0");
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

inline double kernel_linear(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), Errc::DimensionMismatch, "kernel arguments differ in length");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

struct SmoConfig {
  double tol = 1e-3;
  std::size_t max_passes = 10;
  std::size_t max_iters = 5'000'000;
  std::size_t cache_limit = 8000;  // full kernel matrix at or below this many points
  bool record_trace = false;
};

struct SvrParams {
  double C = 1.0;
  double epsilon = 0.1;
  double gamma = 0.0;  // <= 0 means 1 / window
  Kernel kernel = Kernel::Rbf;
  SmoConfig smo;
};

struct SvrModel {
  std::size_t dim = 0;
  Kernel kernel = Kernel::Rbf;
  double gamma = 1.0;
  double C = 1.0;
  double epsilon = 0.1;
  double bias = 0.0;
  std::size_t train_size = 0;
  std::vector<std::size_t> support_index;  // training rows with beta != 0
  std::vector<double> support_beta;
  std::vector<double> support_inputs;  // row-major, dim per row
  bool converged = true;
  std::size_t iterations = 0;
  std::vector<double> objective_trace;  // D after every SMO step, when requested

  double kernel_value(std::span<const double> a, std::span<const double> b) const {
    return kernel == Kernel::Rbf ? kernel_rbf(a, b, gamma) : kernel_linear(a, b);
  }

  std::span<const double> support_input(std::size_t s) const {
    return std::span<const double>(support_inputs).subspan(s * dim, dim);
  }

  /// Coefficients expanded to one per training row.
  std::vector<double> full_beta() const {
    std::vector<double> beta(train_size, 0.0);
    for (std::size_t s = 0; s < support_index.size(); ++s) beta[support_index[s]] = support_beta[s];
    return beta;
  }

  friend bool operator==(const SvrModel& a, const SvrModel& b) {
    return a.dim == b.dim && a.kernel == b.kernel && a.gamma == b.gamma && a.C == b.C &&
           a.epsilon == b.epsilon && a.bias == b.bias && a.train_size == b.train_size &&
           a.support_index == b.support_index && a.support_beta == b.support_beta &&
           a.support_inputs == b.support_inputs && a.converged == b.converged;
  }
};

inline double svr_predict(const SvrModel& model, std::span<const double> x) {
  require(x.size() == model.dim, Errc::DimensionMismatch,
          "input has " + std::to_string(x.size()) + " values, model expects " + std::to_string(model.dim));
  double f = model.bias;
  for (std::size_t s = 0; s < model.support_beta.size(); ++s)
    f += model.support_beta[s] * model.kernel_value(x, model.support_input(s));
  return f;
}

namespace detail {

class KernelSource {
 public:
  KernelSource(const SupervisedSet& data, Kernel kernel, double gamma, std::size_t cache_limit)
      : data_(data), kernel_(kernel), gamma_(gamma), n_(data.size()) {
    diag_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) diag_[i] = eval(i, i);
    if (n_ <= cache_limit) {
      full_.resize(n_ * n_);
      for (std::size_t i = 0; i < n_; ++i) {
        full_[i * n_ + i] = diag_[i];
        for (std::size_t j = i + 1; j < n_; ++j) full_[i * n_ + j] = full_[j * n_ + i] = eval(i, j);
      }
    } else {
      col_a_.resize(n_);
      col_b_.resize(n_);
    }
  }

  double diag(std::size_t i) const { return diag_[i]; }

  // Column i; the returned span stays valid until the next call with slot.
  std::span<const double> column(std::size_t i, int slot) {
    if (!full_.empty()) return std::span<const double>(full_).subspan(i * n_, n_);
    auto& buf = slot == 0 ? col_a_ : col_b_;
    for (std::size_t j = 0; j < n_; ++j) buf[j] = eval(i, j);
    return buf;
  }

 private:
  double eval(std::size_t i, std::size_t j) const {
    return kernel_ == Kernel::Rbf ? kernel_rbf(data_.input(i), data_.input(j), gamma_)
                                  : kernel_linear(data_.input(i), data_.input(j));
  }

  const SupervisedSet& data_;
  Kernel kernel_;
  double gamma_;
  std::size_t n_;
  std::vector<double> diag_;
  std::vector<double> full_;
  std::vector<double> col_a_;
  std::vector<double> col_b_;
};

// Value of the pair restriction phi(t) - phi(0).
inline double pair_gain(double t, double bi, double bj, double grad, double eta, double eps) {
  return t * grad - 0.5 * eta * t * t -
         eps * (std::abs(bi + t) - std::abs(bi) + std::abs(bj - t) - std::abs(bj));
}

// Exact maximizer of the pair restriction over [lo, hi].
inline double best_pair_step(double bi, double bj, double grad, double eta, double eps, double lo,
                             double hi) {
  std::array<double, 4> knots{lo, hi, -bi, bj};
  std::sort(knots.begin(), knots.end());
  std::vector<double> cand{lo, hi};
  for (std::size_t s = 0; s + 1 < knots.size(); ++s) {
    const double a = std::max(knots[s], lo);
    const double b = std::min(knots[s + 1], hi);
    if (!(a < b)) continue;
    cand.push_back(a);
    cand.push_back(b);
    if (eta > 1e-12) {
      const double mid = 0.5 * (a + b);
      const double si = (bi + mid) > 0 ? 1.0 : -1.0;
      const double sj = (bj - mid) > 0 ? 1.0 : -1.0;
      const double t = (grad - eps * si + eps * sj) / eta;
      cand.push_back(std::clamp(t, a, b));
    }
  }
  double best_t = 0.0;
  double best = 0.0;
  for (double t : cand) {
    const double g = pair_gain(t, bi, bj, grad, eta, eps);
    if (g > best) {
      best = g;
      best_t = t;
    }
  }
  return best_t;
}

}  // namespace detail

/// D(beta) for the model's coefficients on its training data.
inline double svr_dual_objective(const SvrModel& model, const SupervisedSet& data) {
  require(data.size() == model.train_size, Errc::DimensionMismatch, "model was fitted on a different set");
  require(data.window() == model.dim || data.empty(), Errc::DimensionMismatch, "input width differs");
  double lin = 0.0;
  double quad = 0.0;
  const auto ns = model.support_beta.size();
  for (std::size_t a = 0; a < ns; ++a) {
    const double ba = model.support_beta[a];
    lin += data.target(model.support_index[a]) * ba - model.epsilon * std::abs(ba);
    for (std::size_t b = 0; b < ns; ++b)
      quad += ba * model.support_beta[b] * model.kernel_value(model.support_input(a), model.support_input(b));
  }
  return lin - 0.5 * quad;
}

inline SvrModel fit_svr(const SupervisedSet& data, const SvrParams& params) {
  require(!data.empty(), Errc::EmptyDataset, "SVR needs at least one training pair");
  require(params.C > 0.0, Errc::InvalidArgument, "C must be > 0");
  require(params.epsilon >= 0.0, Errc::InvalidArgument, "epsilon must be >= 0");
  require(params.smo.tol > 0.0 && params.smo.max_passes >= 1 && params.smo.max_iters >= 1,
          Errc::InvalidArgument, "invalid SMO configuration");

  const std::size_t n = data.size();
  const double C = params.C;
  const double eps = params.epsilon;
  const double gamma = params.gamma > 0.0 ? params.gamma : 1.0 / static_cast<double>(data.window());

  detail::KernelSource K(data, params.kernel, gamma, params.smo.cache_limit);
  std::vector<double> beta(n, 0.0);
  // F_i = y_i - (K beta)_i
  std::vector<double> F(data.targets().begin(), data.targets().end());

  SvrModel model;
  model.dim = data.window();
  model.kernel = params.kernel;
  model.gamma = gamma;
  model.C = C;
  model.epsilon = eps;
  model.train_size = n;

  // Right derivative of D along +e_i and left derivative along -e_i.
  auto up_rate = [&](std::size_t i) { return beta[i] >= 0.0 ? F[i] - eps : F[i] + eps; };
  auto down_rate = [&](std::size_t i) { return beta[i] > 0.0 ? F[i] - eps : F[i] + eps; };

  double objective = 0.0;
  std::size_t stalled = 0;
  std::size_t iter = 0;
  bool converged = false;
  double m_up = 0.0;
  double m_down = 0.0;

  while (true) {
    // maximal violating pair: i maximizes the up-rate, j minimizes the down-rate
    constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
    std::size_t i1 = none, i2 = none, j1 = none, j2 = none;
    for (std::size_t k = 0; k < n; ++k) {
      if (beta[k] < C) {
        const double r = up_rate(k);
        if (i1 == none || r > up_rate(i1)) {
          i2 = i1;
          i1 = k;
        } else if (i2 == none || r > up_rate(i2)) {
          i2 = k;
        }
      }
      if (beta[k] > -C) {
        const double l = down_rate(k);
        if (j1 == none || l < down_rate(j1)) {
          j2 = j1;
          j1 = k;
        } else if (j2 == none || l < down_rate(j2)) {
          j2 = k;
        }
      }
    }
    m_up = i1 == none ? -std::numeric_limits<double>::infinity() : up_rate(i1);
    m_down = j1 == none ? std::numeric_limits<double>::infinity() : down_rate(j1);
    if (m_up - m_down <= params.smo.tol) {
      converged = true;
      break;
    }
    if (iter >= params.smo.max_iters) break;

    std::size_t i = i1;
    std::size_t j = j1;
    if (i == j) {
      const double via_i2 = i2 == none ? -std::numeric_limits<double>::infinity() : up_rate(i2) - down_rate(j1);
      const double via_j2 = j2 == none ? -std::numeric_limits<double>::infinity() : up_rate(i1) - down_rate(j2);
      if (via_i2 <= 0.0 && via_j2 <= 0.0) {
        converged = true;  // only a same-point "pair" violates; nothing can move
        break;
      }
      if (via_i2 >= via_j2) {
        i = i2;
      } else {
        j = j2;
      }
    }

    const auto Ki = K.column(i, 0);
    const auto Kj = K.column(j, 1);
    const double eta = K.diag(i) + K.diag(j) - 2.0 * Ki[j];
    const double lo = std::max(-C - beta[i], beta[j] - C);
    const double hi = std::min(C - beta[i], beta[j] + C);
    const double t = detail::best_pair_step(beta[i], beta[j], F[i] - F[j], eta, eps, lo, hi);
    const double gain = detail::pair_gain(t, beta[i], beta[j], F[i] - F[j], eta, eps);

    if (t != 0.0) {
      beta[i] = std::clamp(beta[i] + t, -C, C);
      beta[j] = std::clamp(beta[j] - t, -C, C);
      for (std::size_t k = 0; k < n; ++k) F[k] -= t * (Ki[k] - Kj[k]);
      objective += gain;
    }
    ++iter;
    if (params.smo.record_trace) model.objective_trace.push_back(objective);

    if (gain <= 1e-15 * std::max(1.0, std::abs(objective))) {
      if (++stalled >= params.smo.max_passes) break;
    } else {
      stalled = 0;
    }
  }

  // bias: mean over free support vectors, else midpoint of [m_down, m_up]
  double bias_sum = 0.0;
  std::size_t free_count = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (beta[k] != 0.0 && std::abs(beta[k]) < C) {
      bias_sum += beta[k] > 0.0 ? F[k] - eps : F[k] + eps;
      ++free_count;
    }
  }
  if (free_count > 0) {
    model.bias = bias_sum / static_cast<double>(free_count);
  } else if (std::isfinite(m_up) && std::isfinite(m_down)) {
    model.bias = 0.5 * (m_up + m_down);
  } else {
    model.bias = std::isfinite(m_up) ? m_up : m_down;
  }

  for (std::size_t k = 0; k < n; ++k) {
    if (beta[k] == 0.0) continue;
    model.support_index.push_back(k);
    model.support_beta.push_back(beta[k]);
    auto x = data.input(k);
    model.support_inputs.insert(model.support_inputs.end(), x.begin(), x.end());
  }
  model.converged = converged;
  model.iterations = iter;
  return model;
}

}  // namespace gridcast
