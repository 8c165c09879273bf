#pragma once

// Single-layer LSTM regressor: the window is fed one scalar per time step,
// the prediction is a linear readout of the final hidden output. Gates are
// logistic; block input and cell output use softsign (or tanh). No peepholes.
//
//   i = sig(W_i x + U_i h + b_i)   f = sig(W_f x + U_f h + b_f)
//   o = sig(W_o x + U_o h + b_o)   g = act(W_g x + U_g h + b_g)
//   c' = f * c + i * g             h' = o * act(c')

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "gridcast/data.hpp"
#include "gridcast/error.hpp"
#include "gridcast/util.hpp"

namespace gridcast {

enum class Activation { Softsign, Tanh };

inline double softsign(double z) { return z / (1.0 + std::abs(z)); }

/// Flat parameter layout, gate blocks ordered (input, forget, output, block):
/// [W (4H) | U (4H x H, row-major) | b (4H) | w_out (H) | b_out].
class LstmModel {
 public:
  LstmModel() = default;
  explicit LstmModel(std::size_t cells, Activation act = Activation::Softsign)
      : cells_(cells), act_(act), params_(parameter_count(cells), 0.0) {
    require(cells >= 1, Errc::InvalidArgument, "LSTM needs at least one memory cell");
  }
  LstmModel(std::size_t cells, Activation act, std::vector<double> params)
      : cells_(cells), act_(act), params_(std::move(params)) {
    require(params_.size() == parameter_count(cells), Errc::DimensionMismatch,
            "parameter vector has the wrong length");
  }

  static constexpr std::size_t parameter_count(std::size_t H) { return 4 * H * H + 9 * H + 1; }

  enum Gate : std::size_t { In = 0, Forget = 1, Out = 2, Block = 3 };

  std::size_t cells() const noexcept { return cells_; }
  Activation activation() const noexcept { return act_; }
  std::size_t size() const noexcept { return params_.size(); }
  std::span<const double> params() const noexcept { return params_; }
  std::span<double> params() noexcept { return params_; }

  std::size_t w_offset() const noexcept { return 0; }
  std::size_t u_offset() const noexcept { return 4 * cells_; }
  std::size_t b_offset() const noexcept { return 4 * cells_ + 4 * cells_ * cells_; }
  std::size_t out_offset() const noexcept { return 8 * cells_ + 4 * cells_ * cells_; }

  double& W(Gate g, std::size_t h) { return params_[g * cells_ + h]; }
  double W(Gate g, std::size_t h) const { return params_[g * cells_ + h]; }
  double& U(Gate g, std::size_t h, std::size_t k) { return params_[u_offset() + (g * cells_ + h) * cells_ + k]; }
  double U(Gate g, std::size_t h, std::size_t k) const { return params_[u_offset() + (g * cells_ + h) * cells_ + k]; }
  double& b(Gate g, std::size_t h) { return params_[b_offset() + g * cells_ + h]; }
  double b(Gate g, std::size_t h) const { return params_[b_offset() + g * cells_ + h]; }
  double& w_out(std::size_t h) { return params_[out_offset() + h]; }
  double w_out(std::size_t h) const { return params_[out_offset() + h]; }
  double& b_out() { return params_.back(); }
  double b_out() const { return params_.back(); }

  double act(double z) const { return act_ == Activation::Softsign ? softsign(z) : std::tanh(z); }

  friend bool operator==(const LstmModel&, const LstmModel&) = default;

 private:
  std::size_t cells_ = 0;
  Activation act_ = Activation::Softsign;
  std::vector<double> params_;
};

struct LstmState {
  std::vector<double> h;
  std::vector<double> c;

  static LstmState zeros(std::size_t cells) { return {std::vector<double>(cells, 0.0), std::vector<double>(cells, 0.0)}; }
};

/// Next state plus the gate values that produced it.
struct LstmStep {
  LstmState state;
  std::vector<double> input_gate;
  std::vector<double> forget_gate;
  std::vector<double> output_gate;
  std::vector<double> block_input;
};

inline LstmStep lstm_step(const LstmModel& m, double x, const LstmState& prev) {
  const std::size_t H = m.cells();
  require(prev.h.size() == H && prev.c.size() == H, Errc::DimensionMismatch, "state size differs from cell count");
  LstmStep s;
  s.state = LstmState::zeros(H);
  s.input_gate.resize(H);
  s.forget_gate.resize(H);
  s.output_gate.resize(H);
  s.block_input.resize(H);
  using G = LstmModel::Gate;
  auto pre = [&](G g, std::size_t h) {
    double z = m.W(g, h) * x + m.b(g, h);
    for (std::size_t k = 0; k < H; ++k) z += m.U(g, h, k) * prev.h[k];
    return z;
  };
  for (std::size_t h = 0; h < H; ++h) {
    const double i = 1.0 / (1.0 + std::exp(-pre(G::In, h)));
    const double f = 1.0 / (1.0 + std::exp(-pre(G::Forget, h)));
    const double o = 1.0 / (1.0 + std::exp(-pre(G::Out, h)));
    const double g = m.act(pre(G::Block, h));
    const double c = f * prev.c[h] + i * g;
    s.input_gate[h] = i;
    s.forget_gate[h] = f;
    s.output_gate[h] = o;
    s.block_input[h] = g;
    s.state.c[h] = c;
    s.state.h[h] = o * m.act(c);
  }
  return s;
}

inline double lstm_readout(const LstmModel& m, std::span<const double> h) {
  double y = m.b_out();
  for (std::size_t k = 0; k < m.cells(); ++k) y += m.w_out(k) * h[k];
  return y;
}

inline double lstm_forward(const LstmModel& m, std::span<const double> window, std::size_t expected_len) {
  require(window.size() == expected_len, Errc::DimensionMismatch,
          "window has " + std::to_string(window.size()) + " values, expected " + std::to_string(expected_len));
  LstmState st = LstmState::zeros(m.cells());
  for (double x : window) st = lstm_step(m, x, st).state;
  return lstm_readout(m, st.h);
}

inline double lstm_forward(const LstmModel& m, std::span<const double> window) {
  return lstm_forward(m, window, window.size());
}

/// Gate/input weights uniform in +-scale, forget-gate bias `forget_bias`,
/// other biases zero, readout uniform in +-scale.
inline LstmModel lstm_init(std::size_t cells, std::uint64_t seed, Activation act = Activation::Softsign,
                           double scale = 0.08, double forget_bias = 1.0) {
  LstmModel m(cells, act);
  Rng rng(seed);
  auto p = m.params();
  for (std::size_t j = 0; j < m.b_offset(); ++j) p[j] = rng.uniform(-scale, scale);
  for (std::size_t h = 0; h < cells; ++h) m.b(LstmModel::Forget, h) = forget_bias;
  for (std::size_t h = 0; h < cells; ++h) m.w_out(h) = rng.uniform(-scale, scale);
  m.b_out() = 0.0;
  return m;
}

namespace detail {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Batched forward pass (columns = samples) keeping what BPTT needs.
struct LstmTape {
  std::vector<Eigen::MatrixXd> gates;  // per step: 4H x B activations
  std::vector<Eigen::MatrixXd> cells;  // per step: c_t, H x B
  std::vector<Eigen::MatrixXd> hidden; // h_0 .. h_n
  Eigen::RowVectorXd pred;
};

inline LstmTape lstm_tape(const LstmModel& m, const SupervisedSet& batch) {
  const auto H = static_cast<Eigen::Index>(m.cells());
  const auto B = static_cast<Eigen::Index>(batch.size());
  const auto n = batch.window();
  Eigen::Map<const Eigen::VectorXd> W(m.params().data() + m.w_offset(), 4 * H);
  Eigen::Map<const RowMat> U(m.params().data() + m.u_offset(), 4 * H, H);
  Eigen::Map<const Eigen::VectorXd> b(m.params().data() + m.b_offset(), 4 * H);
  Eigen::Map<const Eigen::VectorXd> wo(m.params().data() + m.out_offset(), H);
  Eigen::Map<const RowMat> X(batch.inputs().data(), B, static_cast<Eigen::Index>(n));

  LstmTape tape;
  tape.gates.reserve(n);
  tape.cells.reserve(n + 1);
  tape.hidden.reserve(n + 1);
  tape.cells.push_back(Eigen::MatrixXd::Zero(H, B));
  tape.hidden.push_back(Eigen::MatrixXd::Zero(H, B));
  const bool ss = m.activation() == Activation::Softsign;
  for (std::size_t t = 0; t < n; ++t) {
    Eigen::MatrixXd Z = U * tape.hidden.back();
    Z.noalias() += W * X.col(static_cast<Eigen::Index>(t)).transpose();
    Z.colwise() += b;
    Z.topRows(3 * H) = (1.0 + (-Z.topRows(3 * H).array()).exp()).inverse().matrix();
    if (ss) {
      Z.bottomRows(H) = (Z.bottomRows(H).array() / (1.0 + Z.bottomRows(H).array().abs())).matrix();
    } else {
      Z.bottomRows(H) = Z.bottomRows(H).array().tanh().matrix();
    }
    Eigen::MatrixXd c = (Z.middleRows(H, H).array() * tape.cells.back().array() +
                         Z.topRows(H).array() * Z.bottomRows(H).array()).matrix();
    Eigen::ArrayXXd ac = ss ? (c.array() / (1.0 + c.array().abs())).eval() : c.array().tanh().eval();
    tape.hidden.push_back((Z.middleRows(2 * H, H).array() * ac).matrix());
    tape.cells.push_back(std::move(c));
    tape.gates.push_back(std::move(Z));
  }
  tape.pred = (wo.transpose() * tape.hidden.back()).array() + m.b_out();
  return tape;
}

}  // namespace detail

struct LstmGradient {
  double loss = 0.0;  // 1/2 mean squared error
  std::vector<double> grad;
};

/// Exact gradient of 1/2 mean((pred - target)^2) by backpropagation through
/// all time steps.
inline LstmGradient lstm_loss_and_gradient(const LstmModel& m, const SupervisedSet& batch) {
  require(!batch.empty(), Errc::EmptyDataset, "empty batch");
  const auto H = static_cast<Eigen::Index>(m.cells());
  const auto B = static_cast<Eigen::Index>(batch.size());
  const std::size_t n = batch.window();
  const detail::LstmTape tape = detail::lstm_tape(m, batch);

  Eigen::Map<const detail::RowMat> U(m.params().data() + m.u_offset(), 4 * H, H);
  Eigen::Map<const Eigen::VectorXd> wo(m.params().data() + m.out_offset(), H);
  Eigen::Map<const detail::RowMat> X(batch.inputs().data(), B, static_cast<Eigen::Index>(n));
  Eigen::Map<const Eigen::RowVectorXd> y(batch.targets().data(), B);

  LstmGradient out;
  out.grad.assign(m.size(), 0.0);
  Eigen::Map<Eigen::VectorXd> gW(out.grad.data() + m.w_offset(), 4 * H);
  Eigen::Map<detail::RowMat> gU(out.grad.data() + m.u_offset(), 4 * H, H);
  Eigen::Map<Eigen::VectorXd> gb(out.grad.data() + m.b_offset(), 4 * H);
  Eigen::Map<Eigen::VectorXd> gwo(out.grad.data() + m.out_offset(), H);

  const Eigen::RowVectorXd err = tape.pred - y;
  out.loss = 0.5 * err.squaredNorm() / static_cast<double>(B);
  const Eigen::RowVectorXd dpred = err / static_cast<double>(B);
  gwo = tape.hidden.back() * dpred.transpose();
  out.grad.back() = dpred.sum();

  const bool ss = m.activation() == Activation::Softsign;
  Eigen::MatrixXd dh = wo * dpred;  // H x B
  Eigen::MatrixXd dc = Eigen::MatrixXd::Zero(H, B);
  Eigen::MatrixXd dZ(4 * H, B);
  for (std::size_t t = n; t-- > 0;) {
    const Eigen::MatrixXd& Z = tape.gates[t];
    const auto i = Z.topRows(H).array();
    const auto f = Z.middleRows(H, H).array();
    const auto o = Z.middleRows(2 * H, H).array();
    const auto g = Z.bottomRows(H).array();
    const auto c = tape.cells[t + 1].array();
    const Eigen::ArrayXXd ac = ss ? (c / (1.0 + c.abs())).eval() : c.tanh().eval();
    const Eigen::ArrayXXd dac = ss ? (1.0 - ac.abs()).square().eval() : (1.0 - ac.square()).eval();

    dc.array() += dh.array() * o * dac;
    dZ.topRows(H) = (dc.array() * g * i * (1.0 - i)).matrix();
    dZ.middleRows(H, H) = (dc.array() * tape.cells[t].array() * f * (1.0 - f)).matrix();
    dZ.middleRows(2 * H, H) = (dh.array() * ac * o * (1.0 - o)).matrix();
    const Eigen::ArrayXXd dg = ss ? (1.0 - g.abs()).square().eval() : (1.0 - g.square()).eval();
    dZ.bottomRows(H) = (dc.array() * i * dg).matrix();

    gW.noalias() += dZ * X.col(static_cast<Eigen::Index>(t));
    gU.noalias() += dZ * tape.hidden[t].transpose();
    gb += dZ.rowwise().sum();
    dh.noalias() = U.transpose() * dZ;
    dc = (dc.array() * f).matrix();
  }
  return out;
}

inline std::vector<double> lstm_bptt(const LstmModel& m, const SupervisedSet& batch) {
  return lstm_loss_and_gradient(m, batch).grad;
}

/// 1/2 mean squared error over a set, by the batched forward pass.
inline double lstm_loss(const LstmModel& m, const SupervisedSet& data) {
  require(!data.empty(), Errc::EmptyDataset, "empty set");
  const auto tape = detail::lstm_tape(m, data);
  Eigen::Map<const Eigen::RowVectorXd> y(data.targets().data(), static_cast<Eigen::Index>(data.size()));
  return 0.5 * (tape.pred - y).squaredNorm() / static_cast<double>(data.size());
}

struct AdagradState {
  std::vector<double> accum;
  double eta = 0.01;
  double eps = 1e-8;

  AdagradState() = default;
  AdagradState(std::size_t size, double eta_, double eps_) : accum(size, 0.0), eta(eta_), eps(eps_) {
    require(eta > 0.0 && eps >= 0.0, Errc::InvalidArgument, "ADAGRAD needs eta > 0 and eps >= 0");
  }
};

/// G_j += g_j^2; w_j -= eta g_j / (sqrt(G_j) + eps).
inline void adagrad_step(std::span<double> params, std::span<const double> grads, AdagradState& state) {
  require(params.size() == grads.size() && grads.size() == state.accum.size(), Errc::ShapeMismatch,
          "parameter, gradient and accumulator sizes differ");
  for (double g : grads) require(std::isfinite(g), Errc::NonFiniteGradient, "gradient has a non-finite entry");
  for (std::size_t j = 0; j < params.size(); ++j) {
    const double g = grads[j];
    if (g == 0.0) continue;
    state.accum[j] += g * g;
    params[j] -= state.eta * g / (std::sqrt(state.accum[j]) + state.eps);
  }
}

struct LstmTrainConfig {
  std::size_t epochs = 30;
  std::size_t batch = 32;
  double eta = 0.01;
  double eps = 1e-8;
  double clip_norm = 0.0;  // 0 disables gradient-norm clipping
  std::uint64_t seed = 1;
};

struct LstmTrainResult {
  LstmModel model;
  std::vector<double> epoch_loss;  // mean minibatch loss per epoch
  std::size_t best_epoch = 0;      // 1-based; 0 when no epoch ran
};

/// Mini-batch ADAGRAD over seeded shuffles; returns the parameters at the end
/// of the epoch with the lowest mean loss.
inline LstmTrainResult train_lstm(const LstmModel& init, const SupervisedSet& data, const LstmTrainConfig& cfg) {
  require(!data.empty(), Errc::EmptyDataset, "cannot train on an empty set");
  require(cfg.batch >= 1, Errc::InvalidArgument, "batch must be >= 1");
  LstmTrainResult res{init, {}, 0};
  if (cfg.epochs == 0) return res;

  LstmModel cur = init;
  AdagradState opt(cur.size(), cfg.eta, cfg.eps);
  Rng rng(cfg.seed);
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  double best = std::numeric_limits<double>::infinity();

  for (std::size_t ep = 1; ep <= cfg.epochs; ++ep) {
    rng.shuffle(order);
    double sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t s = 0; s < order.size(); s += cfg.batch) {
      const std::size_t e = std::min(order.size(), s + cfg.batch);
      const SupervisedSet mb = data.subset(std::span<const std::size_t>(order).subspan(s, e - s));
      LstmGradient lg = lstm_loss_and_gradient(cur, mb);
      if (!std::isfinite(lg.loss)) {
        res.epoch_loss.push_back(lg.loss);
        fail(Errc::NonFiniteObjective, "LSTM loss diverged in epoch " + std::to_string(ep));
      }
      if (cfg.clip_norm > 0.0) {
        double nrm = 0.0;
        for (double g : lg.grad) nrm += g * g;
        nrm = std::sqrt(nrm);
        if (nrm > cfg.clip_norm)
          for (double& g : lg.grad) g *= cfg.clip_norm / nrm;
      }
      adagrad_step(cur.params(), lg.grad, opt);
      sum += lg.loss;
      ++batches;
    }
    const double mean = sum / static_cast<double>(batches);
    res.epoch_loss.push_back(mean);
    if (mean < best) {
      best = mean;
      res.model = cur;
      res.best_epoch = ep;
    }
  }
  return res;
}

}  // namespace gridcast
