#pragma once

// Benchmark harness: run configuration, per-method training and rolling test
// evaluation, CSV report and SVG plots of the per-step metrics.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gridcast/data.hpp"
#include "gridcast/error.hpp"
#include "gridcast/metrics.hpp"
#include "gridcast/multistep.hpp"
#include "gridcast/util.hpp"

namespace gridcast {

struct BenchConfig {
  std::string data;
  std::string column = "Global_active_power";
  std::vector<Method> methods{Method::Arma, Method::Svr, Method::Nar, Method::Lstm};
  std::size_t window = 30;
  std::size_t horizon = 120;
  std::size_t train_size = 5000;
  std::size_t lstm_train_size = 100000;
  std::size_t test_size = 0;  // 0: everything after the training region
  std::size_t start_offset = 0;
  std::size_t stride = 0;  // 0: horizon
  std::uint64_t seed = 1;
  std::size_t workers = 0;
  bool hybrid = false;
  bool abs_error_variance = false;

  ArmaParams arma;
  SvrParams svr;
  NarParams nar;
  LstmParams lstm;

  std::size_t effective_stride() const { return stride > 0 ? stride : horizon; }
  std::size_t train_size_for(Method m) const { return m == Method::Lstm ? lstm_train_size : train_size; }

  ModelSpec spec_for(Method m) const {
    ModelSpec s;
    s.method = m;
    s.window = window;
    s.base_seed = seed;
    s.arma = arma;
    s.svr = svr;
    s.nar = nar;
    s.lstm = lstm;
    s.validate();
    return s;
  }
};

namespace detail {

inline bool parse_bool(std::string_view v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  fail(Errc::InvalidArgument, "not a boolean: '" + std::string(v) + "'");
}

inline std::size_t parse_count(std::string_view v) {
  const long long x = parse_int(v);
  require(x >= 0, Errc::InvalidArgument, "negative value '" + std::string(v) + "'");
  return static_cast<std::size_t>(x);
}

}  // namespace detail

/// Applies one `key = value` setting. Keys mirror the CLI flags with
/// underscores (`train_size`, `svr_c`, ...).
inline void apply_setting(BenchConfig& c, std::string_view key, std::string_view value) {
  using detail::parse_bool;
  using detail::parse_count;
  const std::string v(value);
  if (key == "data") c.data = v;
  else if (key == "column") c.column = v;
  else if (key == "methods") {
    c.methods.clear();
    for (auto m : split_view(value, ',')) {
      m = trim(m);
      if (!m.empty()) c.methods.push_back(parse_method(m));
    }
    require(!c.methods.empty(), Errc::InvalidArgument, "methods list is empty");
  }
  else if (key == "window") c.window = parse_count(value);
  else if (key == "horizon") c.horizon = parse_count(value);
  else if (key == "train_size") c.train_size = parse_count(value);
  else if (key == "lstm_train_size") c.lstm_train_size = parse_count(value);
  else if (key == "test_size") c.test_size = parse_count(value);
  else if (key == "start_offset") c.start_offset = parse_count(value);
  else if (key == "stride") c.stride = parse_count(value);
  else if (key == "seed") c.seed = parse_count(value);
  else if (key == "workers") c.workers = parse_count(value);
  else if (key == "hybrid") c.hybrid = parse_bool(value);
  else if (key == "abs_error_variance") c.abs_error_variance = parse_bool(value);
  else if (key == "arma_p") c.arma.p = parse_count(value);
  else if (key == "arma_q") c.arma.q = parse_count(value);
  else if (key == "arma_select") c.arma.select = parse_bool(value);
  else if (key == "arma_p_max") c.arma.p_max = parse_count(value);
  else if (key == "arma_q_max") c.arma.q_max = parse_count(value);
  else if (key == "svr_c") c.svr.C = parse_double(value);
  else if (key == "svr_epsilon") c.svr.epsilon = parse_double(value);
  else if (key == "svr_gamma") c.svr.gamma = parse_double(value);
  else if (key == "svr_kernel") {
    require(value == "rbf" || value == "linear", Errc::InvalidArgument, "svr_kernel is rbf or linear");
    c.svr.kernel = value == "rbf" ? Kernel::Rbf : Kernel::Linear;
  }
  else if (key == "svr_tol") c.svr.smo.tol = parse_double(value);
  else if (key == "svr_max_iters") c.svr.smo.max_iters = parse_count(value);
  else if (key == "nar_hidden") c.nar.hidden = parse_count(value);
  else if (key == "nar_max_iters") c.nar.lm.max_iters = parse_count(value);
  else if (key == "nar_mu") c.nar.lm.mu0 = parse_double(value);
  else if (key == "nar_grad_tol") c.nar.lm.grad_tol = parse_double(value);
  else if (key == "lstm_cells") c.lstm.cells = parse_count(value);
  else if (key == "lstm_epochs") c.lstm.train.epochs = parse_count(value);
  else if (key == "lstm_batch") c.lstm.train.batch = parse_count(value);
  else if (key == "lstm_eta") c.lstm.train.eta = parse_double(value);
  else if (key == "lstm_clip") c.lstm.train.clip_norm = parse_double(value);
  else if (key == "lstm_activation") {
    require(value == "softsign" || value == "tanh", Errc::InvalidArgument, "lstm_activation is softsign or tanh");
    c.lstm.activation = value == "softsign" ? Activation::Softsign : Activation::Tanh;
  }
  else fail(Errc::InvalidArgument, "unknown config key '" + std::string(key) + "'");
}

/// Flat `key = value` lines; `#` starts a comment.
inline BenchConfig parse_config(std::istream& in, BenchConfig base = {}) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view s = line;
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos)
      fail(Errc::InvalidArgument, "config line " + std::to_string(line_no) + ": expected key = value");
    try {
      apply_setting(base, trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
    } catch (const Error& e) {
      fail(Errc::InvalidArgument, "config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return base;
}

inline BenchConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::FileNotFound, path.string());
  BenchConfig c = parse_config(in);
  // relative data paths are taken relative to the config file
  if (!c.data.empty() && std::filesystem::path(c.data).is_relative())
    c.data = (path.parent_path() / c.data).lexically_normal().string();
  return c;
}

/// Every effective setting, in a fixed order, as `key = value` pairs.
inline std::vector<std::pair<std::string, std::string>> config_echo(const BenchConfig& c) {
  std::string methods;
  for (Method m : c.methods) methods += (methods.empty() ? "" : ",") + std::string(method_name(m));
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  auto num = [](double v) { return format_double(v); };
  auto cnt = [](std::size_t v) { return std::to_string(v); };
  return {
      {"data", c.data},
      {"column", c.column},
      {"methods", methods},
      {"window", cnt(c.window)},
      {"horizon", cnt(c.horizon)},
      {"train_size", cnt(c.train_size)},
      {"lstm_train_size", cnt(c.lstm_train_size)},
      {"test_size", cnt(c.test_size)},
      {"start_offset", cnt(c.start_offset)},
      {"stride", cnt(c.effective_stride())},
      {"seed", std::to_string(c.seed)},
      {"hybrid", b(c.hybrid)},
      {"abs_error_variance", b(c.abs_error_variance)},
      {"arma_p", cnt(c.arma.p)},
      {"arma_q", cnt(c.arma.q)},
      {"arma_select", b(c.arma.select)},
      {"arma_p_max", cnt(c.arma.p_max)},
      {"arma_q_max", cnt(c.arma.q_max)},
      {"svr_c", num(c.svr.C)},
      {"svr_epsilon", num(c.svr.epsilon)},
      {"svr_gamma", num(c.svr.gamma)},
      {"svr_kernel", c.svr.kernel == Kernel::Rbf ? "rbf" : "linear"},
      {"svr_tol", num(c.svr.smo.tol)},
      {"svr_max_iters", cnt(c.svr.smo.max_iters)},
      {"nar_hidden", cnt(c.nar.hidden)},
      {"nar_max_iters", cnt(c.nar.lm.max_iters)},
      {"nar_mu", num(c.nar.lm.mu0)},
      {"nar_grad_tol", num(c.nar.lm.grad_tol)},
      {"lstm_cells", cnt(c.lstm.cells)},
      {"lstm_epochs", cnt(c.lstm.train.epochs)},
      {"lstm_batch", cnt(c.lstm.train.batch)},
      {"lstm_eta", num(c.lstm.train.eta)},
      {"lstm_clip", num(c.lstm.train.clip_norm)},
      {"lstm_activation", c.lstm.activation == Activation::Softsign ? "softsign" : "tanh"},
  };
}

struct MethodReport {
  std::string name;
  std::vector<double> mae;             // kW
  std::vector<double> error_variance;  // kW^2
  double train_seconds = 0.0;

  double mean_mae() const {
    double s = 0.0;
    for (double v : mae) s += v;
    return mae.empty() ? 0.0 : s / static_cast<double>(mae.size());
  }
  double mean_variance() const {
    double s = 0.0;
    for (double v : error_variance) s += v;
    return error_variance.empty() ? 0.0 : s / static_cast<double>(error_variance.size());
  }
};

struct HybridSummary {
  std::vector<std::string> assignment;       // method name per step
  std::vector<double> validation_mae;        // hybrid, measured by forecasting the validation set
  std::vector<double> min_constituent_mae;   // componentwise minimum over constituents
  std::vector<MethodReport> constituents;    // per-method validation MAE (variance unused)
  std::size_t validation_origins = 0;
};

struct EvaluationReport {
  std::vector<MethodReport> methods;
  std::size_t horizon = 0;
  std::size_t forecast_count = 0;
  double step_minutes = 1.0;
  std::vector<std::pair<std::string, std::string>> config;
  std::optional<HybridSummary> hybrid;

  const MethodReport* find(std::string_view name) const {
    for (const auto& m : methods)
      if (m.name == name) return &m;
    return nullptr;
  }
};

using ProgressFn = std::function<void(const std::string&)>;

inline EvaluationReport run_benchmark(const BenchConfig& cfg, const ProgressFn& progress = {}) {
  require(!cfg.methods.empty(), Errc::InvalidArgument, "no methods configured");
  require(cfg.window >= 1 && cfg.horizon >= 1, Errc::InvalidArgument, "window and horizon must be >= 1");
  auto say = [&](const std::string& s) {
    if (progress) progress(s);
  };

  const TimeSeries series = load_any_series(cfg.data, cfg.column);
  std::size_t longest = 0;
  for (Method m : cfg.methods) longest = std::max(longest, cfg.train_size_for(m));
  const std::size_t test_start = cfg.start_offset + longest;
  require(test_start < series.size(), Errc::SeriesTooShort,
          "series of " + std::to_string(series.size()) + " samples leaves no test region after " +
              std::to_string(test_start));
  const std::size_t test_end = cfg.test_size > 0 ? test_start + cfg.test_size : series.size();
  require(test_end <= series.size(), Errc::SeriesTooShort, "test region runs past the end of the series");
  const auto upto_test_end = series.values().first(test_end);

  EvaluationReport report;
  report.horizon = cfg.horizon;
  report.step_minutes = static_cast<double>(series.step().count()) / 60.0;
  report.config = config_echo(cfg);

  ForecastMatrix actuals;
  std::vector<std::shared_ptr<const HorizonEnsemble>> ensembles;
  for (Method m : cfg.methods) {
    const std::string name(method_name(m));
    const std::size_t tsize = cfg.train_size_for(m);
    const TimeSeries train = series.slice(test_start - tsize, tsize);
    say("training " + name + " on " + std::to_string(tsize) + " samples");
    const auto t0 = std::chrono::steady_clock::now();
    auto ens = std::make_shared<const HorizonEnsemble>(
        train_horizon_ensemble(cfg.spec_for(m), train, cfg.horizon, cfg.workers));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    auto [fc, act] = rolling_forecasts([&](std::span<const double> w) { return ensemble_forecast(*ens, w); },
                                       upto_test_end, cfg.window, cfg.horizon, test_start, cfg.effective_stride());
    require(fc.rows() >= 2, Errc::TooFewForecasts,
            "test region yields " + std::to_string(fc.rows()) + " forecast origins, need at least 2");
    report.forecast_count = static_cast<std::size_t>(fc.rows());
    report.methods.push_back({name, mae_per_step(fc, act), error_variance_per_step(fc, act, cfg.abs_error_variance),
                              secs});
    actuals = std::move(act);
    ensembles.push_back(std::move(ens));
    say(name + ": mean MAE " + format_double(report.methods.back().mean_mae()) + " kW, trained in " +
        format_double(std::round(secs * 10.0) / 10.0) + " s");
  }

  if (cfg.hybrid && ensembles.size() >= 2) {
    const std::size_t vlen = cfg.train_size / 10;
    const TimeSeries validation = series.slice(test_start - vlen, vlen);
    say("selecting hybrid on " + std::to_string(vlen) + " validation samples");
    HybridForecaster hyb = build_hybrid(ensembles, validation);

    HybridSummary sum;
    sum.validation_origins = hyb.validation_origins;
    for (std::size_t k = 1; k <= cfg.horizon; ++k) sum.assignment.emplace_back(method_name(hyb.method_at(k)));
    auto forecast = [&](std::span<const double> w) { return hybrid_forecast(hyb, w); };
    {
      auto [fc, act] = rolling_forecasts(forecast, validation.values(), cfg.window, cfg.horizon, cfg.window, 1);
      sum.validation_mae = mae_per_step(fc, act);
    }
    sum.min_constituent_mae.assign(cfg.horizon, std::numeric_limits<double>::infinity());
    for (std::size_t e = 0; e < hyb.ensembles.size(); ++e) {
      sum.constituents.push_back({std::string(method_name(hyb.ensembles[e]->method())), hyb.validation_mae[e], {}, 0.0});
      for (std::size_t k = 0; k < cfg.horizon; ++k)
        sum.min_constituent_mae[k] = std::min(sum.min_constituent_mae[k], hyb.validation_mae[e][k]);
    }
    auto [fc, act] = rolling_forecasts(forecast, upto_test_end, cfg.window, cfg.horizon, test_start,
                                       cfg.effective_stride());
    report.methods.push_back({"hybrid", mae_per_step(fc, act), error_variance_per_step(fc, act, cfg.abs_error_variance),
                              0.0});
    report.hybrid = std::move(sum);
  }
  return report;
}

// ---------------------------------------------------------------------------
// CSV

inline std::string format_csv(const EvaluationReport& report) {
  std::string out = "method,step,mae_kw,error_variance_kw2\n";
  for (const auto& m : report.methods) {
    for (std::size_t k = 0; k < m.mae.size(); ++k) {
      out += m.name + ',' + std::to_string(k + 1) + ',' + format_double(m.mae[k]) + ',' +
             format_double(m.error_variance[k]) + '\n';
    }
  }
  return out;
}

inline void emit_csv(const EvaluationReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::IoError, "cannot write " + path.string());
  out << format_csv(report);
  if (!out) fail(Errc::IoError, "write failed: " + path.string());
}

/// Method blocks in file order; steps must be 1..h within each block.
inline std::vector<MethodReport> parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != "method,step,mae_kw,error_variance_kw2")
    fail(Errc::Format, "report CSV header missing");
  std::vector<MethodReport> out;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto f = split_view(trim(line), ',');
    if (f.size() != 4) fail(Errc::Format, "report CSV row needs 4 fields");
    if (out.empty() || out.back().name != f[0]) out.push_back({std::string(f[0]), {}, {}, 0.0});
    auto& m = out.back();
    if (static_cast<std::size_t>(parse_int(f[1])) != m.mae.size() + 1) fail(Errc::Format, "report CSV steps out of order");
    m.mae.push_back(parse_double(f[2]));
    m.error_variance.push_back(parse_double(f[3]));
  }
  return out;
}

// ---------------------------------------------------------------------------
// SVG

enum class Metric { Mae, Variance };

namespace detail {

inline std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline double nice_step(double range) {
  const double raw = range / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double r = raw / mag;
  return (r <= 1.0 ? 1.0 : r <= 2.0 ? 2.0 : r <= 5.0 ? 5.0 : 10.0) * mag;
}

inline std::string tick_label(double v, double step) {
  int digits = 0;
  while (digits < 6 && std::abs(step * std::pow(10.0, digits) - std::round(step * std::pow(10.0, digits))) > 1e-9)
    ++digits;
  return fixed(v, digits);
}

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

/// Metric versus forecast step (minutes), one polyline per method, legend on
/// the right.
inline std::string render_plot(const EvaluationReport& report, Metric metric) {
  require(!report.methods.empty(), Errc::Empty, "report has no methods");
  using detail::fixed;
  constexpr double W = 760, Hgt = 460, left = 80, right = 150, top = 50, bottom = 60;
  const double pw = W - left - right;
  const double ph = Hgt - top - bottom;
  const std::size_t h = report.methods.front().mae.size();

  auto values = [&](const MethodReport& m) -> const std::vector<double>& {
    return metric == Metric::Mae ? m.mae : m.error_variance;
  };
  double ymax = 0.0;
  for (const auto& m : report.methods)
    for (double v : values(m)) ymax = std::max(ymax, v);
  if (!(ymax > 0.0)) ymax = 1.0;
  const double ystep = detail::nice_step(ymax);
  const double ytop = std::ceil(ymax / ystep) * ystep;

  const double x0 = report.step_minutes;
  const double x1 = report.step_minutes * static_cast<double>(std::max<std::size_t>(h, 1));
  const double xspan = x1 > x0 ? x1 - x0 : 1.0;
  auto px = [&](double minutes) { return left + (x1 > x0 ? (minutes - x0) / xspan * pw : pw / 2.0); };
  auto py = [&](double v) { return top + ph - v / ytop * ph; };

  static constexpr const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  const std::string title = metric == Metric::Mae ? "Mean absolute error per forecast step"
                                                  : "Error variance per forecast step";
  const std::string ylabel = metric == Metric::Mae ? "MAE (kW)" : "Error variance (kW²)";

  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << Hgt << "\" viewBox=\"0 0 " << W
    << ' ' << Hgt << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<title>" << title << "</title>\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << fixed(left + pw / 2) << "\" y=\"28\" text-anchor=\"middle\" font-size=\"15\">" << title
    << "</text>\n";

  // axes and grid
  s << "<g class=\"axes\" stroke=\"black\" stroke-width=\"1\">\n";
  s << "<line x1=\"" << fixed(left) << "\" y1=\"" << fixed(top + ph) << "\" x2=\"" << fixed(left + pw) << "\" y2=\""
    << fixed(top + ph) << "\"/>\n";
  s << "<line x1=\"" << fixed(left) << "\" y1=\"" << fixed(top) << "\" x2=\"" << fixed(left) << "\" y2=\""
    << fixed(top + ph) << "\"/>\n";
  s << "</g>\n<g class=\"ticks\">\n";
  for (double v = 0.0; v <= ytop + 1e-12 * ytop; v += ystep) {
    s << "<line x1=\"" << fixed(left) << "\" y1=\"" << fixed(py(v)) << "\" x2=\"" << fixed(left + pw) << "\" y2=\""
      << fixed(py(v)) << "\" stroke=\"#dddddd\"/>\n";
    s << "<text x=\"" << fixed(left - 6) << "\" y=\"" << fixed(py(v) + 4) << "\" text-anchor=\"end\">"
      << detail::tick_label(v, ystep) << "</text>\n";
  }
  const double xstep = detail::nice_step(xspan);
  for (double v = std::ceil(x0 / xstep) * xstep; v <= x1 + 1e-9; v += xstep) {
    s << "<line x1=\"" << fixed(px(v)) << "\" y1=\"" << fixed(top + ph) << "\" x2=\"" << fixed(px(v)) << "\" y2=\""
      << fixed(top + ph + 5) << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << fixed(px(v)) << "\" y=\"" << fixed(top + ph + 19) << "\" text-anchor=\"middle\">"
      << detail::tick_label(v, xstep) << "</text>\n";
  }
  s << "</g>\n";
  s << "<text x=\"" << fixed(left + pw / 2) << "\" y=\"" << fixed(Hgt - 14)
    << "\" text-anchor=\"middle\">Forecast step (minutes)</text>\n";
  s << "<text transform=\"translate(20," << fixed(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">" << ylabel
    << "</text>\n";

  for (std::size_t i = 0; i < report.methods.size(); ++i) {
    const auto& m = report.methods[i];
    const char* color = palette[i % std::size(palette)];
    s << "<polyline class=\"series\" data-method=\"" << detail::xml_escape(m.name) << "\" fill=\"none\" stroke=\""
      << color << "\" stroke-width=\"1.6\" points=\"";
    const auto& v = values(m);
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (k) s << ' ';
      s << fixed(px(report.step_minutes * static_cast<double>(k + 1))) << ',' << fixed(py(v[k]));
    }
    s << "\"/>\n";
    const double ly = top + 10 + 20 * static_cast<double>(i);
    s << "<line x1=\"" << fixed(left + pw + 15) << "\" y1=\"" << fixed(ly) << "\" x2=\"" << fixed(left + pw + 40)
      << "\" y2=\"" << fixed(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    s << "<text x=\"" << fixed(left + pw + 46) << "\" y=\"" << fixed(ly + 4) << "\">" << detail::xml_escape(m.name)
      << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

inline void emit_plot(const EvaluationReport& report, Metric metric, const std::filesystem::path& path) {
  const std::string svg = render_plot(report, metric);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::IoError, "cannot write " + path.string());
  out << svg;
  if (!out) fail(Errc::IoError, "write failed: " + path.string());
}

}  // namespace gridcast
