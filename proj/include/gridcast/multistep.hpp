#pragma once

// Direct multi-step framework: h independent per-step models trained in
// parallel, h-step forecast vectors, ensemble files and the per-step hybrid.

#include <array>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gridcast/arma.hpp"
#include "gridcast/data.hpp"
#include "gridcast/error.hpp"
#include "gridcast/lstm.hpp"
#include "gridcast/metrics.hpp"
#include "gridcast/nar.hpp"
#include "gridcast/parallel.hpp"
#include "gridcast/svr.hpp"
#include "gridcast/util.hpp"

namespace gridcast {

enum class Method { Arma, Svr, Nar, Lstm };

constexpr std::string_view method_name(Method m) {
  switch (m) {
    case Method::Arma: return "arma";
    case Method::Svr: return "svr";
    case Method::Nar: return "nar";
    case Method::Lstm: return "lstm";
  }
  return "?";
}

inline Method parse_method(std::string_view s) {
  for (Method m : {Method::Arma, Method::Svr, Method::Nar, Method::Lstm})
    if (s == method_name(m)) return m;
  fail(Errc::InvalidArgument, "unknown method '" + std::string(s) + "'");
}

/// Tie-break rank for hybrid selection (lower wins).
constexpr int hybrid_preference(Method m) {
  switch (m) {
    case Method::Nar: return 0;
    case Method::Svr: return 1;
    case Method::Lstm: return 2;
    case Method::Arma: return 3;
  }
  return 4;
}

struct ArmaParams {
  std::size_t p = 3;
  std::size_t q = 2;
  bool select = false;
  std::size_t p_max = 5;
  std::size_t q_max = 5;
};

struct NarParams {
  std::size_t hidden = 40;
  LmConfig lm;
};

struct LstmParams {
  std::size_t cells = 50;
  Activation activation = Activation::Softsign;
  LstmTrainConfig train;  // train.seed is replaced by the per-step seed
};

struct ModelSpec {
  Method method = Method::Nar;
  std::size_t window = 30;
  std::uint64_t base_seed = 1;
  ArmaParams arma;
  SvrParams svr;
  NarParams nar;
  LstmParams lstm;

  ModelSpec() = default;
  ModelSpec(Method m, std::size_t window_, std::uint64_t seed) : method(m), window(window_), base_seed(seed) {
    validate();
  }

  void validate() const {
    require(window >= 1, Errc::InvalidArgument, "window must be >= 1");
    switch (method) {
      case Method::Arma:
        require(arma.select ? (arma.p_max + arma.q_max >= 1 && arma.p_max <= 5 && arma.q_max <= 5)
                            : arma.p + arma.q >= 1,
                Errc::InvalidArgument, "ARMA orders need p + q >= 1 (search limited to 5)");
        break;
      case Method::Svr:
        require(svr.C > 0.0 && svr.epsilon >= 0.0 && svr.smo.tol > 0.0 && svr.smo.max_passes >= 1 &&
                    svr.smo.max_iters >= 1,
                Errc::InvalidArgument, "SVR needs C > 0, epsilon >= 0 and a valid SMO config");
        break;
      case Method::Nar:
        require(nar.hidden >= 1 && nar.lm.max_iters >= 1, Errc::InvalidArgument,
                "NAR needs >= 1 hidden unit and >= 1 iteration");
        break;
      case Method::Lstm:
        require(lstm.cells >= 1 && lstm.train.batch >= 1 && lstm.train.eta > 0.0, Errc::InvalidArgument,
                "LSTM needs >= 1 cell, batch >= 1 and eta > 0");
        break;
    }
  }
};

using StepModel = std::variant<ArmaModel, SvrModel, MlpModel, LstmModel>;

/// Prediction of one direct-strategy model on a normalized window.
inline double predict_step(const StepModel& model, std::span<const double> window) {
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, SvrModel>) {
          return svr_predict(m, window);
        } else if constexpr (std::is_same_v<T, MlpModel>) {
          return mlp_forward(m, window);
        } else if constexpr (std::is_same_v<T, LstmModel>) {
          return lstm_forward(m, window);
        } else {
          return arma_forecast(m, window, 1).front();
        }
      },
      model);
}

struct EnsembleMeta {
  std::size_t train_size = 0;
  std::uint64_t base_seed = 0;
  std::vector<double> seconds;  // wall time per subproblem; not serialized
};

class HorizonEnsemble {
 public:
  HorizonEnsemble() = default;
  HorizonEnsemble(Method method, std::size_t window, std::size_t horizon, Normalizer norm,
                  std::vector<StepModel> models, EnsembleMeta meta)
      : method_(method), window_(window), horizon_(horizon), norm_(norm), models_(std::move(models)),
        meta_(std::move(meta)) {
    require(horizon_ >= 1 && window_ >= 1, Errc::InvalidArgument, "ensemble needs h >= 1 and n >= 1");
    require(models_.size() == (recursive() ? 1 : horizon_), Errc::DimensionMismatch,
            "ensemble holds the wrong number of models");
  }

  Method method() const noexcept { return method_; }
  std::size_t window() const noexcept { return window_; }
  std::size_t horizon() const noexcept { return horizon_; }
  const Normalizer& normalizer() const noexcept { return norm_; }
  const EnsembleMeta& meta() const noexcept { return meta_; }
  /// ARMA is a single recursive model covering every step.
  bool recursive() const noexcept { return method_ == Method::Arma; }
  const std::vector<StepModel>& models() const noexcept { return models_; }
  /// Model for step k (1-based).
  const StepModel& model(std::size_t k) const { return models_.at(recursive() ? 0 : k - 1); }
  std::uint64_t step_seed(std::size_t k) const { return meta_.base_seed + k; }

  /// Copy with step k (1-based) replaced.
  HorizonEnsemble with_step(std::size_t k, StepModel m) const {
    require(!recursive() && k >= 1 && k <= horizon_, Errc::InvalidArgument, "no such step");
    HorizonEnsemble out = *this;
    out.models_[k - 1] = std::move(m);
    return out;
  }

 private:
  Method method_ = Method::Nar;
  std::size_t window_ = 1;
  std::size_t horizon_ = 1;
  Normalizer norm_;
  std::vector<StepModel> models_;
  EnsembleMeta meta_;
};

/// Trains the model for step k (1-based) on an already normalized training
/// series. Not used for ARMA, which has a single recursive model.
inline StepModel train_step_model(const ModelSpec& spec, std::span<const double> normalized, std::size_t k) {
  const std::uint64_t seed = spec.base_seed + k;
  const SupervisedSet set = make_supervised(normalized, spec.window, k);
  switch (spec.method) {
    case Method::Svr:
      return fit_svr(set, spec.svr);
    case Method::Nar:
      return lm_br_train(nguyen_widrow_init(spec.window, spec.nar.hidden, seed), set, spec.nar.lm).model;
    case Method::Lstm: {
      LstmTrainConfig cfg = spec.lstm.train;
      cfg.seed = seed;
      return train_lstm(lstm_init(spec.lstm.cells, seed, spec.lstm.activation), set, cfg).model;
    }
    case Method::Arma:
      break;
  }
  fail(Errc::InvalidArgument, "ARMA has no per-step models");
}

inline ArmaModel train_arma_model(const ModelSpec& spec, std::span<const double> normalized) {
  std::size_t p = spec.arma.p;
  std::size_t q = spec.arma.q;
  if (spec.arma.select) std::tie(p, q) = select_order(normalized, spec.arma.p_max, spec.arma.q_max);
  return fit_arma(normalized, p, q);
}

/// One model per offset k = 1..h, trained in parallel with seed base_seed + k.
/// The result does not depend on `workers`.
inline HorizonEnsemble train_horizon_ensemble(const ModelSpec& spec, const TimeSeries& train, std::size_t h,
                                              std::size_t workers = 0) {
  spec.validate();
  require(h >= 1, Errc::InvalidArgument, "horizon must be >= 1");
  require(train.size() >= spec.window + h, Errc::SeriesTooShort,
          "training series of " + std::to_string(train.size()) + " samples is too short for n=" +
              std::to_string(spec.window) + ", h=" + std::to_string(h));
  const auto [norm, scaled] = standardize(train);
  const std::string name(method_name(spec.method));
  EnsembleMeta meta{train.size(), spec.base_seed, {}};

  using clock = std::chrono::steady_clock;
  if (spec.method == Method::Arma) {
    const auto t0 = clock::now();
    ArmaModel m;
    try {
      m = train_arma_model(spec, scaled.values());
    } catch (const Error& e) {
      throw TrainingError(name, 1, e.code(), e.what());
    }
    meta.seconds.push_back(std::chrono::duration<double>(clock::now() - t0).count());
    return HorizonEnsemble(spec.method, spec.window, h, norm, {StepModel{std::move(m)}}, std::move(meta));
  }

  std::vector<std::optional<StepModel>> slots(h);
  meta.seconds.assign(h, 0.0);
  const auto errors = parallel_for(h, resolve_workers(workers), [&](std::size_t idx) {
    const auto t0 = clock::now();
    slots[idx] = train_step_model(spec, scaled.values(), idx + 1);
    meta.seconds[idx] = std::chrono::duration<double>(clock::now() - t0).count();
  });
  for (std::size_t idx = 0; idx < h; ++idx) {
    if (!errors[idx]) continue;
    try {
      std::rethrow_exception(errors[idx]);
    } catch (const Error& e) {
      throw TrainingError(name, idx + 1, e.code(), e.what());
    } catch (const std::exception& e) {
      throw TrainingError(name, idx + 1, Errc::Training, e.what());
    }
  }
  std::vector<StepModel> models;
  models.reserve(h);
  for (auto& s : slots) models.push_back(std::move(*s));
  return HorizonEnsemble(spec.method, spec.window, h, norm, std::move(models), std::move(meta));
}

/// h-step forecast in kilowatts from the last n raw values.
inline std::vector<double> ensemble_forecast(const HorizonEnsemble& ens, std::span<const double> window) {
  require(window.size() == ens.window(), Errc::DimensionMismatch,
          "window has " + std::to_string(window.size()) + " values, ensemble expects " +
              std::to_string(ens.window()));
  const std::vector<double> z = ens.normalizer().normalize(window);
  std::vector<double> out;
  if (ens.recursive()) {
    out = arma_forecast(std::get<ArmaModel>(ens.model(1)), z, ens.horizon());
  } else {
    out.resize(ens.horizon());
    for (std::size_t k = 1; k <= ens.horizon(); ++k) out[k - 1] = predict_step(ens.model(k), z);
  }
  for (double& v : out) v = ens.normalizer().denormalize(v);
  return out;
}

/// Forecasts from every origin t = first, first + stride, ... with t >= n and
/// t + h <= size; row m holds the forecast made from origin m and the matching
/// actual values.
template <typename Forecaster>
std::pair<ForecastMatrix, ForecastMatrix> rolling_forecasts(const Forecaster& forecast, std::span<const double> series,
                                                            std::size_t n, std::size_t h, std::size_t first,
                                                            std::size_t stride) {
  require(stride >= 1, Errc::InvalidArgument, "stride must be >= 1");
  first = std::max(first, n);
  std::size_t M = 0;
  if (series.size() >= h && first + h <= series.size()) M = (series.size() - h - first) / stride + 1;
  ForecastMatrix fc(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(h));
  ForecastMatrix act(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(h));
  for (std::size_t m = 0; m < M; ++m) {
    const std::size_t t = first + m * stride;
    const std::vector<double> f = forecast(series.subspan(t - n, n));
    for (std::size_t k = 0; k < h; ++k) {
      fc(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)) = f[k];
      act(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)) = series[t + k];
    }
  }
  return {std::move(fc), std::move(act)};
}

// ---------------------------------------------------------------------------
// Hybrid

struct HybridForecaster {
  std::vector<std::shared_ptr<const HorizonEnsemble>> ensembles;
  std::vector<std::size_t> assignment;            // per step: index into ensembles
  std::vector<std::vector<double>> validation_mae;  // per ensemble, per step
  std::size_t validation_origins = 0;

  std::size_t window() const { return ensembles.front()->window(); }
  std::size_t horizon() const { return ensembles.front()->horizon(); }
  Method method_at(std::size_t k) const { return ensembles[assignment.at(k - 1)]->method(); }

  /// Per-step validation MAE of the selected methods.
  std::vector<double> selected_mae() const {
    std::vector<double> out(assignment.size());
    for (std::size_t k = 0; k < assignment.size(); ++k) out[k] = validation_mae[assignment[k]][k];
    return out;
  }
};

/// Per-step argmin of the MAE table; equal values go to the method with the
/// better hybrid_preference rank.
inline std::vector<std::size_t> assign_steps(const std::vector<Method>& methods,
                                             const std::vector<std::vector<double>>& mae) {
  require(!methods.empty() && methods.size() == mae.size(), Errc::MismatchedEnsembles,
          "one MAE row per method is required");
  const std::size_t h = mae.front().size();
  for (const auto& row : mae) require(row.size() == h, Errc::MismatchedEnsembles, "MAE rows differ in length");
  std::vector<std::size_t> out(h, 0);
  for (std::size_t k = 0; k < h; ++k) {
    std::size_t best = 0;
    for (std::size_t e = 1; e < methods.size(); ++e) {
      const double a = mae[e][k];
      const double b = mae[best][k];
      if (a < b || (a == b && hybrid_preference(methods[e]) < hybrid_preference(methods[best]))) best = e;
    }
    out[k] = best;
  }
  return out;
}

inline std::vector<double> hybrid_forecast(const HybridForecaster& hyb, std::span<const double> window) {
  require(window.size() == hyb.window(), Errc::DimensionMismatch,
          "window has " + std::to_string(window.size()) + " values, hybrid expects " + std::to_string(hyb.window()));
  std::vector<std::optional<std::vector<double>>> cache(hyb.ensembles.size());
  std::vector<double> out(hyb.horizon());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const std::size_t e = hyb.assignment[k];
    if (!cache[e]) cache[e] = ensemble_forecast(*hyb.ensembles[e], window);
    out[k] = (*cache[e])[k];
  }
  return out;
}

inline constexpr std::size_t kMinValidationOrigins = 30;

/// Selects, for every step, the ensemble with the lowest validation MAE.
/// Validation origins advance by `stride` (default every sample).
inline HybridForecaster build_hybrid(std::vector<std::shared_ptr<const HorizonEnsemble>> ensembles,
                                     const TimeSeries& validation, std::size_t stride = 1) {
  require(ensembles.size() >= 2, Errc::MismatchedEnsembles, "a hybrid needs at least two ensembles");
  const std::size_t n = ensembles.front()->window();
  const std::size_t h = ensembles.front()->horizon();
  std::vector<Method> methods;
  for (const auto& e : ensembles) {
    require(e != nullptr, Errc::MismatchedEnsembles, "null ensemble");
    require(e->window() == n && e->horizon() == h, Errc::MismatchedEnsembles,
            "ensembles disagree on window or horizon");
    for (Method m : methods)
      require(m != e->method(), Errc::MismatchedEnsembles, "two ensembles share a method");
    methods.push_back(e->method());
  }
  const std::size_t origins =
      validation.size() >= n + h ? (validation.size() - n - h) / stride + 1 : 0;
  require(origins >= kMinValidationOrigins, Errc::InsufficientValidation,
          "validation yields " + std::to_string(origins) + " forecast origins, need " +
              std::to_string(kMinValidationOrigins));

  HybridForecaster hyb;
  hyb.validation_origins = origins;
  for (const auto& e : ensembles) {
    auto [fc, act] = rolling_forecasts([&](std::span<const double> w) { return ensemble_forecast(*e, w); },
                                       validation.values(), n, h, n, stride);
    hyb.validation_mae.push_back(mae_per_step(fc, act));
  }
  hyb.assignment = assign_steps(methods, hyb.validation_mae);
  hyb.ensembles = std::move(ensembles);
  return hyb;
}

// ---------------------------------------------------------------------------
// Ensemble files
//
//   gridcast-ensemble 1
//   method <arma|svr|nar|lstm>
//   window <n>
//   horizon <h>
//   normalizer <mean> <std>
//   train_size <count>
//   base_seed <seed>
//   models <count>
//   model <k>
//   <model block>
//   ...
//   end
//
// Model blocks:
//   arma <p> <q> <intercept> <noise_variance> <long_ar_order> <effective_samples> <near_unit_root>
//   phi <p> <values...>
//   theta <q> <values...>
//   tail_values <count> <values...>
//   tail_residuals <q> <values...>
//
//   svr <dim> <rbf|linear> <gamma> <C> <epsilon> <bias> <train_size> <converged> <iterations>
//   support <count>
//   <row index> <beta> <dim input values>      (one line per support vector)
//
//   mlp <inputs> <hidden>
//   params <count> <values...>
//
//   lstm <cells> <softsign|tanh>
//   params <count> <values...>
//
// Numbers are shortest round-trip decimals, so files reproduce models bit for bit.

namespace detail {

class TokenReader {
 public:
  explicit TokenReader(std::istream& in) : in_(in) {}

  std::string word() {
    std::string s;
    if (!(in_ >> s)) fail(Errc::Format, "unexpected end of file");
    return s;
  }
  void expect(std::string_view kw) {
    const std::string s = word();
    if (s != kw) fail(Errc::Format, "expected '" + std::string(kw) + "', found '" + s + "'");
  }
  double number() { return parse_double(word()); }
  std::size_t count() {
    const long long v = parse_int(word());
    if (v < 0) fail(Errc::Format, "negative count");
    return static_cast<std::size_t>(v);
  }
  std::uint64_t u64() {
    const std::string s = word();
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) fail(Errc::Format, "bad unsigned '" + s + "'");
    return v;
  }
  std::vector<double> vec(std::string_view kw) {
    expect(kw);
    const std::size_t n = count();
    std::vector<double> v(n);
    for (auto& x : v) x = number();
    return v;
  }

 private:
  std::istream& in_;
};

inline void write_vec(std::ostream& out, std::string_view kw, std::span<const double> v) {
  out << kw << ' ' << v.size();
  for (double x : v) out << ' ' << format_double(x);
  out << '\n';
}

inline void write_model(std::ostream& out, const StepModel& model) {
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ArmaModel>) {
          out << "arma " << m.p << ' ' << m.q << ' ' << format_double(m.intercept) << ' '
              << format_double(m.noise_variance) << ' ' << m.long_ar_order << ' ' << m.effective_samples << ' '
              << (m.near_unit_root ? 1 : 0) << '\n';
          write_vec(out, "phi", m.phi);
          write_vec(out, "theta", m.theta);
          write_vec(out, "tail_values", m.tail_values);
          write_vec(out, "tail_residuals", m.tail_residuals);
        } else if constexpr (std::is_same_v<T, SvrModel>) {
          out << "svr " << m.dim << ' ' << (m.kernel == Kernel::Rbf ? "rbf" : "linear") << ' '
              << format_double(m.gamma) << ' ' << format_double(m.C) << ' ' << format_double(m.epsilon) << ' '
              << format_double(m.bias) << ' ' << m.train_size << ' ' << (m.converged ? 1 : 0) << ' '
              << m.iterations << '\n';
          out << "support " << m.support_beta.size() << '\n';
          for (std::size_t s = 0; s < m.support_beta.size(); ++s) {
            out << m.support_index[s] << ' ' << format_double(m.support_beta[s]);
            for (double x : m.support_input(s)) out << ' ' << format_double(x);
            out << '\n';
          }
        } else if constexpr (std::is_same_v<T, MlpModel>) {
          out << "mlp " << m.inputs() << ' ' << m.hidden() << '\n';
          write_vec(out, "params", m.params());
        } else {
          out << "lstm " << m.cells() << ' ' << (m.activation() == Activation::Softsign ? "softsign" : "tanh")
              << '\n';
          write_vec(out, "params", m.params());
        }
      },
      model);
}

inline StepModel read_model(TokenReader& in) {
  const std::string kind = in.word();
  if (kind == "arma") {
    ArmaModel m;
    m.p = in.count();
    m.q = in.count();
    m.intercept = in.number();
    m.noise_variance = in.number();
    m.long_ar_order = in.count();
    m.effective_samples = in.count();
    m.near_unit_root = in.count() != 0;
    m.phi = in.vec("phi");
    m.theta = in.vec("theta");
    m.tail_values = in.vec("tail_values");
    m.tail_residuals = in.vec("tail_residuals");
    if (m.phi.size() != m.p || m.theta.size() != m.q) fail(Errc::Format, "ARMA coefficient count mismatch");
    return m;
  }
  if (kind == "svr") {
    SvrModel m;
    m.dim = in.count();
    const std::string k = in.word();
    if (k != "rbf" && k != "linear") fail(Errc::Format, "unknown kernel '" + k + "'");
    m.kernel = k == "rbf" ? Kernel::Rbf : Kernel::Linear;
    m.gamma = in.number();
    m.C = in.number();
    m.epsilon = in.number();
    m.bias = in.number();
    m.train_size = in.count();
    m.converged = in.count() != 0;
    m.iterations = in.count();
    in.expect("support");
    const std::size_t ns = in.count();
    for (std::size_t s = 0; s < ns; ++s) {
      m.support_index.push_back(in.count());
      m.support_beta.push_back(in.number());
      for (std::size_t d = 0; d < m.dim; ++d) m.support_inputs.push_back(in.number());
    }
    return m;
  }
  if (kind == "mlp") {
    const std::size_t inputs = in.count();
    const std::size_t hidden = in.count();
    return MlpModel(inputs, hidden, in.vec("params"));
  }
  if (kind == "lstm") {
    const std::size_t cells = in.count();
    const std::string a = in.word();
    if (a != "softsign" && a != "tanh") fail(Errc::Format, "unknown activation '" + a + "'");
    return LstmModel(cells, a == "softsign" ? Activation::Softsign : Activation::Tanh, in.vec("params"));
  }
  fail(Errc::Format, "unknown model block '" + kind + "'");
}

inline HorizonEnsemble read_ensemble_body(TokenReader& in) {
  const std::string version = in.word();
  if (version != "1") fail(Errc::Format, "unsupported ensemble version " + version);
  in.expect("method");
  const Method method = parse_method(in.word());
  in.expect("window");
  const std::size_t n = in.count();
  in.expect("horizon");
  const std::size_t h = in.count();
  in.expect("normalizer");
  const double mean = in.number();
  const double sd = in.number();
  EnsembleMeta meta;
  in.expect("train_size");
  meta.train_size = in.count();
  in.expect("base_seed");
  meta.base_seed = in.u64();
  in.expect("models");
  const std::size_t count = in.count();
  std::vector<StepModel> models;
  for (std::size_t i = 0; i < count; ++i) {
    in.expect("model");
    if (in.count() != i + 1) fail(Errc::Format, "model blocks out of order");
    models.push_back(read_model(in));
  }
  in.expect("end");
  return HorizonEnsemble(method, n, h, Normalizer(mean, sd), std::move(models), std::move(meta));
}

}  // namespace detail

inline void write_ensemble(const HorizonEnsemble& ens, std::ostream& out) {
  out << "gridcast-ensemble 1\n";
  out << "method " << method_name(ens.method()) << '\n';
  out << "window " << ens.window() << '\n';
  out << "horizon " << ens.horizon() << '\n';
  out << "normalizer " << format_double(ens.normalizer().mean()) << ' ' << format_double(ens.normalizer().std())
      << '\n';
  out << "train_size " << ens.meta().train_size << '\n';
  out << "base_seed " << ens.meta().base_seed << '\n';
  out << "models " << ens.models().size() << '\n';
  for (std::size_t i = 0; i < ens.models().size(); ++i) {
    out << "model " << i + 1 << '\n';
    detail::write_model(out, ens.models()[i]);
  }
  out << "end\n";
}

inline std::string serialize(const HorizonEnsemble& ens) {
  std::ostringstream out;
  write_ensemble(ens, out);
  return out.str();
}

inline HorizonEnsemble read_ensemble(std::istream& in) {
  detail::TokenReader r(in);
  r.expect("gridcast-ensemble");
  return detail::read_ensemble_body(r);
}

//   gridcast-hybrid 1
//   window <n>
//   horizon <h>
//   ensembles <count>
//   validation_origins <M>
//   assignment <h> <method per step...>
//   validation_mae <method> <h> <values...>       (one line per ensemble)
//   <embedded ensemble files, in the listed order>
//   end
inline void write_hybrid(const HybridForecaster& hyb, std::ostream& out) {
  out << "gridcast-hybrid 1\n";
  out << "window " << hyb.window() << '\n';
  out << "horizon " << hyb.horizon() << '\n';
  out << "ensembles " << hyb.ensembles.size() << '\n';
  out << "validation_origins " << hyb.validation_origins << '\n';
  out << "assignment " << hyb.assignment.size();
  for (std::size_t e : hyb.assignment) out << ' ' << method_name(hyb.ensembles[e]->method());
  out << '\n';
  for (std::size_t e = 0; e < hyb.ensembles.size(); ++e) {
    out << "validation_mae " << method_name(hyb.ensembles[e]->method()) << ' ';
    detail::write_vec(out, "values", hyb.validation_mae[e]);
  }
  for (const auto& e : hyb.ensembles) write_ensemble(*e, out);
  out << "end\n";
}

inline HybridForecaster read_hybrid(std::istream& in) {
  detail::TokenReader r(in);
  r.expect("gridcast-hybrid");
  if (r.word() != "1") fail(Errc::Format, "unsupported hybrid version");
  r.expect("window");
  const std::size_t n = r.count();
  r.expect("horizon");
  const std::size_t h = r.count();
  r.expect("ensembles");
  const std::size_t count = r.count();
  HybridForecaster hyb;
  r.expect("validation_origins");
  hyb.validation_origins = r.count();
  r.expect("assignment");
  if (r.count() != h) fail(Errc::Format, "assignment length differs from horizon");
  std::vector<Method> assigned(h);
  for (auto& m : assigned) m = parse_method(r.word());
  std::vector<Method> order;
  for (std::size_t e = 0; e < count; ++e) {
    r.expect("validation_mae");
    order.push_back(parse_method(r.word()));
    hyb.validation_mae.push_back(r.vec("values"));
  }
  for (std::size_t e = 0; e < count; ++e) {
    r.expect("gridcast-ensemble");
    auto ens = std::make_shared<const HorizonEnsemble>(detail::read_ensemble_body(r));
    if (ens->method() != order[e] || ens->window() != n || ens->horizon() != h)
      fail(Errc::Format, "embedded ensemble does not match the hybrid header");
    hyb.ensembles.push_back(std::move(ens));
  }
  r.expect("end");
  for (Method m : assigned) {
    const auto it = std::find(order.begin(), order.end(), m);
    if (it == order.end()) fail(Errc::Format, "assignment names a missing ensemble");
    hyb.assignment.push_back(static_cast<std::size_t>(it - order.begin()));
  }
  return hyb;
}

inline void save_ensemble(const HorizonEnsemble& ens, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::IoError, "cannot write " + path.string());
  write_ensemble(ens, out);
  if (!out) fail(Errc::IoError, "write failed: " + path.string());
}

inline HorizonEnsemble load_ensemble(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::FileNotFound, path.string());
  return read_ensemble(in);
}

inline void save_hybrid(const HybridForecaster& hyb, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::IoError, "cannot write " + path.string());
  write_hybrid(hyb, out);
  if (!out) fail(Errc::IoError, "write failed: " + path.string());
}

inline HybridForecaster load_hybrid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::FileNotFound, path.string());
  return read_hybrid(in);
}

}  // namespace gridcast
