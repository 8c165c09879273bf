// gridcast: ingest household power data, train direct multi-step ensembles,
// forecast, build per-step hybrids and run the benchmark.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 training failure.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "gridcast/gridcast.hpp"

namespace fs = std::filesystem;
using namespace gridcast;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kTraining = 3 };

struct TrainArgs {
  std::string method;
  std::size_t window = 30;
  std::size_t horizon = 120;
  std::size_t train_size = 5000;
  std::size_t start = 0;
  std::uint64_t seed = 1;
  std::size_t workers = 0;
  std::string data;
  std::string column = "Global_active_power";
  std::string out;
  std::vector<std::string> settings;
};

int cmd_ingest(const std::string& input, const std::string& column, const std::string& out) {
  const TimeSeries s = parse_household_csv(input, column);
  save_series(s, out);
  std::cerr << "ingested " << s.size() << " samples (" << s.imputed_count() << " imputed) into " << out << "\n";
  return kOk;
}

int cmd_train(const TrainArgs& a) {
  BenchConfig cfg;
  for (const auto& kv : a.settings) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) fail(Errc::InvalidArgument, "--set expects key=value, got '" + kv + "'");
    apply_setting(cfg, trim(std::string_view(kv).substr(0, eq)), trim(std::string_view(kv).substr(eq + 1)));
  }
  cfg.window = a.window;
  cfg.seed = a.seed;
  const ModelSpec spec = cfg.spec_for(parse_method(a.method));

  const TimeSeries series = load_any_series(a.data, a.column);
  const TimeSeries train = series.slice(a.start, a.train_size);
  const HorizonEnsemble ens = train_horizon_ensemble(spec, train, a.horizon, resolve_workers(a.workers));
  save_ensemble(ens, a.out);
  double total = 0.0;
  for (double s : ens.meta().seconds) total += s;
  std::cerr << "trained " << method_name(spec.method) << " ensemble (h=" << a.horizon << ", n=" << a.window
            << ") on " << train.size() << " samples, " << total << " s of subproblem time\n";
  return kOk;
}

int cmd_forecast(const std::string& model, const std::string& data, const std::string& column, std::size_t at) {
  std::ifstream in(model, std::ios::binary);
  if (!in) fail(Errc::FileNotFound, model);
  std::string kind;
  in >> kind;
  in.seekg(0);

  const TimeSeries series = load_any_series(data, column);
  std::vector<double> fc;
  auto window_at = [&](std::size_t n) {
    require(at >= n && at <= series.size(), Errc::InsufficientHistory,
            "--at " + std::to_string(at) + " needs " + std::to_string(n) + " samples before it inside a series of " +
                std::to_string(series.size()));
    return series.values().subspan(at - n, n);
  };
  if (kind == "gridcast-hybrid") {
    const HybridForecaster hyb = read_hybrid(in);
    fc = hybrid_forecast(hyb, window_at(hyb.window()));
  } else {
    const HorizonEnsemble ens = read_ensemble(in);
    fc = ensemble_forecast(ens, window_at(ens.window()));
  }
  for (std::size_t k = 0; k < fc.size(); ++k) std::cout << (k ? "," : "") << format_double(fc[k]);
  std::cout << "\n";
  return kOk;
}

int cmd_hybrid(const std::vector<std::string>& models, const std::string& validation, const std::string& column,
               std::size_t stride, const std::string& out) {
  std::vector<std::shared_ptr<const HorizonEnsemble>> ens;
  for (const auto& m : models) ens.push_back(std::make_shared<const HorizonEnsemble>(load_ensemble(m)));
  const HybridForecaster hyb = build_hybrid(std::move(ens), load_any_series(validation, column), stride);
  save_hybrid(hyb, out);
  std::cerr << "hybrid over " << hyb.validation_origins << " validation origins:";
  for (std::size_t k = 1; k <= hyb.horizon(); ++k) std::cerr << ' ' << method_name(hyb.method_at(k));
  std::cerr << "\n";
  return kOk;
}

int cmd_bench(const std::string& config, const std::string& out_dir, bool abs_var, std::size_t workers) {
  BenchConfig cfg = load_config(config);
  if (abs_var) cfg.abs_error_variance = true;
  if (workers > 0) cfg.workers = workers;
  cfg.workers = resolve_workers(cfg.workers);

  const EvaluationReport rep = run_benchmark(cfg, [](const std::string& msg) { std::cerr << msg << "\n"; });
  fs::create_directories(out_dir);
  emit_csv(rep, fs::path(out_dir) / "report.csv");
  emit_plot(rep, Metric::Mae, fs::path(out_dir) / "mae.svg");
  emit_plot(rep, Metric::Variance, fs::path(out_dir) / "variance.svg");

  std::cout << "forecast origins: " << rep.forecast_count << "\n";
  std::cout << "method   mean_mae_kw   mean_error_variance_kw2   train_s\n";
  for (const auto& m : rep.methods) {
    char line[160];
    std::snprintf(line, sizeof line, "%-8s %12.6f %25.6f %9.1f\n", m.name.c_str(), m.mean_mae(), m.mean_variance(),
                  m.train_seconds);
    std::cout << line;
  }
  if (rep.hybrid) {
    std::cout << "hybrid assignment:";
    for (const auto& a : rep.hybrid->assignment) std::cout << ' ' << a;
    std::cout << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gridcast - multi-horizon household power demand forecasting"};
  app.require_subcommand(1);

  std::string input, column = "Global_active_power", out;
  auto* ingest = app.add_subcommand("ingest", "Parse a household power file into a series file");
  ingest->add_option("--input", input, "Semicolon-separated household file")->required();
  ingest->add_option("--column", column, "Column to extract")->capture_default_str();
  ingest->add_option("--out", out, "Series file to write")->required();

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train one direct multi-step ensemble");
  train->add_option("--method", ta.method, "arma | svr | nar | lstm")
      ->required()
      ->check(CLI::IsMember({"arma", "svr", "nar", "lstm"}));
  train->add_option("--window", ta.window, "Input window n")->capture_default_str();
  train->add_option("--horizon", ta.horizon, "Forecast horizon h")->capture_default_str();
  train->add_option("--train-size", ta.train_size, "Training samples")->capture_default_str();
  train->add_option("--start", ta.start, "Index of the first training sample")->capture_default_str();
  train->add_option("--seed", ta.seed, "Base seed (step k uses seed + k)")->capture_default_str();
  train->add_option("--workers", ta.workers, "Worker threads (0 = all CPUs)")->capture_default_str();
  train->add_option("--data", ta.data, "Series file or household file")->required();
  train->add_option("--column", ta.column, "Column when --data is a household file")->capture_default_str();
  train->add_option("--out", ta.out, "Ensemble file to write")->required();
  train->add_option("--set", ta.settings, "Hyperparameter override key=value (config keys, repeatable)");

  std::string model, fdata;
  std::size_t at = 0;
  auto* forecast = app.add_subcommand("forecast", "Print an h-step forecast (kW, comma-separated)");
  forecast->add_option("--model", model, "Ensemble or hybrid file")->required();
  forecast->add_option("--data", fdata, "Series file or household file")->required();
  forecast->add_option("--column", column, "Column when --data is a household file");
  forecast->add_option("--at", at, "Forecast origin: uses the n samples before this index")->required();

  std::string config, out_dir;
  bool abs_var = false;
  std::size_t bench_workers = 0;
  auto* bench = app.add_subcommand("bench", "Run the benchmark and write report.csv, mae.svg, variance.svg");
  bench->add_option("--config", config, "key = value configuration file")->required();
  bench->add_option("--out-dir", out_dir, "Output directory")->required();
  bench->add_flag("--abs-error-variance", abs_var, "Variance of absolute instead of signed errors");
  bench->add_option("--workers", bench_workers, "Worker threads (overrides the config)");

  std::vector<std::string> models;
  std::string validation;
  std::size_t stride = 1;
  auto* hybrid = app.add_subcommand("hybrid", "Select the best ensemble per step on a validation series");
  hybrid->add_option("--models", models, "Ensemble files (one per method)")->required()->expected(2, -1);
  hybrid->add_option("--validation", validation, "Validation series or household file")->required();
  hybrid->add_option("--column", column, "Column when --validation is a household file");
  hybrid->add_option("--stride", stride, "Distance between validation origins")->capture_default_str();
  hybrid->add_option("--out", out, "Hybrid file to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*ingest) return cmd_ingest(input, column, out);
    if (*train) return cmd_train(ta);
    if (*forecast) return cmd_forecast(model, fdata, column, at);
    if (*hybrid) return cmd_hybrid(models, validation, column, stride, out);
    if (*bench) return cmd_bench(config, out_dir, abs_var, bench_workers);
  } catch (const TrainingError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kTraining;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (e.code() == Errc::InvalidArgument) return kUsage;
    return is_training_failure(e.code()) ? kTraining : kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
