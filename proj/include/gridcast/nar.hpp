#pragma once

// One-hidden-layer perceptron (logistic hidden units, linear output) for one
// direct-strategy subproblem, trained by Levenberg-Marquardt with Bayesian
// (evidence-framework) weight regularization.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gridcast/data.hpp"
#include "gridcast/error.hpp"
#include "gridcast/util.hpp"

namespace gridcast {

/// Parameters are kept in one flat vector, ordered
/// [w_hidden (row-major, hidden x inputs) | b_hidden | w_out | b_out].
class MlpModel {
 public:
  MlpModel() = default;
  MlpModel(std::size_t inputs, std::size_t hidden)
      : inputs_(inputs), hidden_(hidden), params_(parameter_count(inputs, hidden), 0.0) {
    require(inputs >= 1 && hidden >= 1, Errc::InvalidArgument, "MLP needs >= 1 input and hidden unit");
  }
  MlpModel(std::size_t inputs, std::size_t hidden, std::vector<double> params)
      : inputs_(inputs), hidden_(hidden), params_(std::move(params)) {
    require(params_.size() == parameter_count(inputs, hidden), Errc::DimensionMismatch,
            "parameter vector has the wrong length");
  }

  static constexpr std::size_t parameter_count(std::size_t inputs, std::size_t hidden) {
    return hidden * inputs + 2 * hidden + 1;
  }

  std::size_t inputs() const noexcept { return inputs_; }
  std::size_t hidden() const noexcept { return hidden_; }
  std::size_t size() const noexcept { return params_.size(); }

  std::span<const double> params() const noexcept { return params_; }
  std::span<double> params() noexcept { return params_; }

  double w_hidden(std::size_t h, std::size_t i) const { return params_[h * inputs_ + i]; }
  double& w_hidden(std::size_t h, std::size_t i) { return params_[h * inputs_ + i]; }
  double b_hidden(std::size_t h) const { return params_[hidden_ * inputs_ + h]; }
  double& b_hidden(std::size_t h) { return params_[hidden_ * inputs_ + h]; }
  double w_out(std::size_t h) const { return params_[hidden_ * inputs_ + hidden_ + h]; }
  double& w_out(std::size_t h) { return params_[hidden_ * inputs_ + hidden_ + h]; }
  double b_out() const { return params_.back(); }
  double& b_out() { return params_.back(); }

  friend bool operator==(const MlpModel&, const MlpModel&) = default;

 private:
  std::size_t inputs_ = 0;
  std::size_t hidden_ = 0;
  std::vector<double> params_;
};

inline double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline double mlp_forward(const MlpModel& model, std::span<const double> x) {
  require(x.size() == model.inputs(), Errc::DimensionMismatch,
          "input has " + std::to_string(x.size()) + " values, network expects " + std::to_string(model.inputs()));
  double y = model.b_out();
  for (std::size_t h = 0; h < model.hidden(); ++h) {
    double z = model.b_hidden(h);
    for (std::size_t i = 0; i < model.inputs(); ++i) z += model.w_hidden(h, i) * x[i];
    y += model.w_out(h) * logistic(z);
  }
  return y;
}

/// Nguyen-Widrow: every hidden weight row gets norm 0.7 * hidden^(1/inputs),
/// hidden biases uniform in +-that norm, output layer uniform in +-0.1.
inline MlpModel nguyen_widrow_init(std::size_t inputs, std::size_t hidden, std::uint64_t seed) {
  MlpModel m(inputs, hidden);
  Rng rng(seed);
  const double scale = 0.7 * std::pow(static_cast<double>(hidden), 1.0 / static_cast<double>(inputs));
  for (std::size_t h = 0; h < hidden; ++h) {
    double norm2 = 0.0;
    for (std::size_t i = 0; i < inputs; ++i) {
      double w = rng.uniform(-1.0, 1.0);
      m.w_hidden(h, i) = w;
      norm2 += w * w;
    }
    if (norm2 == 0.0) {  // measure-zero draw; pick a coordinate direction
      m.w_hidden(h, 0) = 1.0;
      norm2 = 1.0;
    }
    const double f = scale / std::sqrt(norm2);
    for (std::size_t i = 0; i < inputs; ++i) m.w_hidden(h, i) *= f;
  }
  for (std::size_t h = 0; h < hidden; ++h) m.b_hidden(h) = rng.uniform(-scale, scale);
  for (std::size_t h = 0; h < hidden; ++h) m.w_out(h) = rng.uniform(-0.1, 0.1);
  m.b_out() = rng.uniform(-0.1, 0.1);
  return m;
}

namespace detail {

// Errors e_i = target_i - output_i and, optionally, J_ij = de_i / dw_j.
inline void mlp_errors(const MlpModel& model, const SupervisedSet& data, Eigen::VectorXd& e,
                       Eigen::MatrixXd* J) {
  require(data.window() == model.inputs(), Errc::DimensionMismatch, "data window differs from network inputs");
  const std::size_t N = data.size();
  const std::size_t H = model.hidden();
  const std::size_t n = model.inputs();
  e.resize(static_cast<Eigen::Index>(N));
  if (J) J->resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(model.size()));

  // hidden pre-activations for all samples at once: Z = W X' + b
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> W(
      model.params().data(), static_cast<Eigen::Index>(H), static_cast<Eigen::Index>(n));
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> X(
      data.inputs().data(), static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(n));
  Eigen::MatrixXd A = X * W.transpose();  // N x H
  for (std::size_t h = 0; h < H; ++h) {
    const double b = model.b_hidden(h);
    for (Eigen::Index r = 0; r < A.rows(); ++r) A(r, static_cast<Eigen::Index>(h)) = logistic(A(r, static_cast<Eigen::Index>(h)) + b);
  }
  Eigen::Map<const Eigen::VectorXd> wout(model.params().data() + H * n + H, static_cast<Eigen::Index>(H));
  const Eigen::VectorXd y = (A * wout).array() + model.b_out();
  for (std::size_t i = 0; i < N; ++i) e(static_cast<Eigen::Index>(i)) = data.target(i) - y(static_cast<Eigen::Index>(i));

  if (!J) return;
  // de/dw = -dy/dw
  const auto Hi = static_cast<Eigen::Index>(H);
  const auto ni = static_cast<Eigen::Index>(n);
  for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(N); ++r) {
    for (Eigen::Index h = 0; h < Hi; ++h) {
      const double a = A(r, h);
      const double delta = wout(h) * a * (1.0 - a);
      for (Eigen::Index i = 0; i < ni; ++i) (*J)(r, h * ni + i) = -delta * X(r, i);
      (*J)(r, Hi * ni + h) = -delta;
      (*J)(r, Hi * ni + Hi + h) = -a;
    }
    (*J)(r, Hi * ni + 2 * Hi) = -1.0;
  }
}

}  // namespace detail

/// Row i holds d e_i / d w for e_i = target_i - output_i (backpropagation).
inline Eigen::MatrixXd mlp_jacobian(const MlpModel& model, const SupervisedSet& data) {
  require(!data.empty(), Errc::EmptyDataset, "Jacobian of an empty set");
  Eigen::VectorXd e;
  Eigen::MatrixXd J;
  detail::mlp_errors(model, data, e, &J);
  return J;
}

struct LmConfig {
  double mu0 = 1e-3;
  double mu_inc = 10.0;
  double mu_dec = 0.1;
  double mu_min = 1e-20;
  double mu_max = 1e10;
  std::size_t max_iters = 200;
  double grad_tol = 1e-7;
};

struct LmState {
  double mu = 1e-3;
  double alpha = 0.0;
  double beta = 1.0;
  double gamma_eff = 0.0;
  std::size_t iterations = 0;
};

/// One accepted step. F_before and F_after share the hyperparameters in
/// force during the step; the evidence update that follows rescales F.
struct LmTraceEntry {
  double objective_before = 0.0;
  double objective_after = 0.0;
  double sse = 0.0;  // E_D after the step
  double mu = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma_eff = 0.0;  // after the evidence update
};

struct LmResult {
  MlpModel model;
  LmState state;
  std::vector<LmTraceEntry> trace;
};

/// Minimizes F = beta E_D + alpha E_W with E_D = sum e^2, E_W = sum w^2.
inline LmResult lm_br_train(const MlpModel& init, const SupervisedSet& data, const LmConfig& cfg = {}) {
  require(!data.empty(), Errc::EmptyDataset, "cannot train on an empty set");
  require(cfg.max_iters >= 1, Errc::InvalidArgument, "max_iters must be >= 1");
  require(cfg.mu0 > 0.0 && cfg.mu_inc > 1.0 && cfg.mu_dec > 0.0 && cfg.mu_dec < 1.0 &&
              cfg.mu_min > 0.0 && cfg.mu_max >= cfg.mu0,
          Errc::InvalidArgument, "invalid LM damping settings");

  const auto Nw = static_cast<Eigen::Index>(init.size());
  const double N = static_cast<double>(data.size());

  LmResult res{init, LmState{}, {}};
  LmState& st = res.state;
  st.mu = std::clamp(cfg.mu0, cfg.mu_min, cfg.mu_max);
  st.alpha = 0.0;
  st.beta = 1.0;
  st.gamma_eff = static_cast<double>(Nw);

  Eigen::Map<Eigen::VectorXd> w(res.model.params().data(), Nw);
  Eigen::VectorXd e;
  Eigen::MatrixXd J;
  detail::mlp_errors(res.model, data, e, &J);
  double ed = e.squaredNorm();
  double ew = w.squaredNorm();
  auto objective = [&](double sse, double wss) { return st.beta * sse + st.alpha * wss; };
  if (!std::isfinite(objective(ed, ew))) fail(Errc::NonFiniteObjective, "initial objective is not finite");

  Eigen::MatrixXd JtJ(Nw, Nw);
  Eigen::MatrixXd A(Nw, Nw);
  MlpModel trial = res.model;
  Eigen::Map<Eigen::VectorXd> wt(trial.params().data(), Nw);
  Eigen::VectorXd et;

  auto gram = [&] {
    JtJ.setZero();
    JtJ.selfadjointView<Eigen::Lower>().rankUpdate(J.transpose());
    JtJ.triangularView<Eigen::StrictlyUpper>() = JtJ.transpose();
  };
  gram();

  for (std::size_t it = 0; it < cfg.max_iters; ++it) {
    const Eigen::VectorXd grad = st.beta * (J.transpose() * e) + st.alpha * w;
    if (grad.norm() < cfg.grad_tol) break;

    const double f_old = objective(ed, ew);
    bool accepted = false;
    bool any_solve = false;
    while (st.mu <= cfg.mu_max) {
      A = st.beta * JtJ;
      A.diagonal().array() += st.alpha + st.mu;
      Eigen::LLT<Eigen::MatrixXd> llt(A);
      if (llt.info() == Eigen::Success) {
        any_solve = true;
        const Eigen::VectorXd dw = llt.solve(-grad);
        wt = w + dw;
        detail::mlp_errors(trial, data, et, nullptr);
        const double ed_new = et.squaredNorm();
        const double ew_new = wt.squaredNorm();
        const double f_new = objective(ed_new, ew_new);
        if (std::isfinite(f_new) && f_new < f_old) {
          w = wt;
          ed = ed_new;
          ew = ew_new;
          res.trace.push_back({f_old, f_new, ed, st.mu, st.alpha, st.beta, 0.0});
          st.mu = std::max(st.mu * cfg.mu_dec, cfg.mu_min);
          accepted = true;
          break;
        }
      }
      st.mu *= cfg.mu_inc;
    }
    if (!accepted) {
      st.mu = cfg.mu_max;
      if (!any_solve) fail(Errc::SingularSystem, "damped normal equations are not positive definite");
      break;
    }
    ++st.iterations;

    // evidence update at the new point
    detail::mlp_errors(res.model, data, e, &J);
    gram();
    double gamma = static_cast<double>(Nw);
    if (st.alpha > 0.0) {
      A = st.beta * JtJ;
      A.diagonal().array() += st.alpha;
      Eigen::LLT<Eigen::MatrixXd> llt(A);
      if (llt.info() == Eigen::Success) {
        // trace(H^-1) = ||L^-1||_F^2
        Eigen::MatrixXd Linv = Eigen::MatrixXd::Identity(Nw, Nw);
        llt.matrixL().solveInPlace(Linv);
        gamma = static_cast<double>(Nw) - st.alpha * Linv.squaredNorm();
      }
    }
    gamma = std::clamp(gamma, 0.0, static_cast<double>(Nw));
    st.gamma_eff = gamma;
    const double tiny = 1e-300;
    st.alpha = gamma / (2.0 * std::max(ew, tiny));
    st.beta = std::max(N - gamma, 1e-3 * N) / (2.0 * std::max(ed, tiny));
    res.trace.back().gamma_eff = gamma;
  }
  return res;
}

}  // namespace gridcast
