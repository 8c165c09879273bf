#pragma once

// Household power ingestion, z-score normalization and sliding-window
// supervised sets for the per-step subproblems.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gridcast/error.hpp"
#include "gridcast/util.hpp"

namespace gridcast {

using Timestamp = std::chrono::sys_seconds;

/// Uniformly spaced scalar power samples (kW). Immutable once built.
class TimeSeries {
 public:
  TimeSeries() = default;

  /// `imputed` holds the ascending sample indices filled by imputation.
  explicit TimeSeries(std::vector<double> values, Timestamp start = Timestamp{},
             std::chrono::seconds step = std::chrono::seconds{60},
             std::vector<std::size_t> imputed = {})
      : values_(std::move(values)), start_(start), step_(step), imputed_(std::move(imputed)) {
    require(step_.count() > 0, Errc::InvalidArgument, "sampling step must be positive");
    for (double v : values_) require(std::isfinite(v), Errc::InvalidArgument, "non-finite sample");
    require(std::is_sorted(imputed_.begin(), imputed_.end()) &&
                (imputed_.empty() || imputed_.back() < values_.size()),
            Errc::InvalidArgument, "imputed indices out of range");
  }

  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  double operator[](std::size_t i) const { return values_[i]; }

  Timestamp start() const noexcept { return start_; }
  std::chrono::seconds step() const noexcept { return step_; }
  Timestamp time_at(std::size_t i) const {
    return start_ + step_ * static_cast<std::chrono::seconds::rep>(i);
  }

  std::size_t imputed_count() const noexcept { return imputed_.size(); }
  std::span<const std::size_t> imputed_indices() const noexcept { return imputed_; }

  /// Contiguous sub-range [first, first + count).
  TimeSeries slice(std::size_t first, std::size_t count) const {
    require(first <= size() && count <= size() - first, Errc::SeriesTooShort,
            "slice [" + std::to_string(first) + ", +" + std::to_string(count) +
                ") exceeds length " + std::to_string(size()));
    std::vector<std::size_t> imp;
    for (std::size_t i : imputed_)
      if (i >= first && i < first + count) imp.push_back(i - first);
    return TimeSeries(std::vector<double>(values_.begin() + first, values_.begin() + first + count),
                      time_at(first), step_, std::move(imp));
  }

 private:
  std::vector<double> values_;
  Timestamp start_{};
  std::chrono::seconds step_{60};
  std::vector<std::size_t> imputed_;
};

/// z-score scaling fitted on the training region.
class Normalizer {
 public:
  Normalizer() = default;
  Normalizer(double mean, double std) : mean_(mean), std_(std) {
    require(std::isfinite(mean) && std::isfinite(std) && std > 0.0, Errc::DegenerateRange,
            "normalizer needs a finite mean and a positive std");
  }

  static Normalizer identity() { return Normalizer(0.0, 1.0); }

  double mean() const noexcept { return mean_; }
  double std() const noexcept { return std_; }

  double normalize(double x) const noexcept { return (x - mean_) / std_; }
  double denormalize(double z) const noexcept { return z * std_ + mean_; }

  std::vector<double> normalize(std::span<const double> xs) const {
    std::vector<double> out(xs.size());
    std::transform(xs.begin(), xs.end(), out.begin(), [this](double x) { return normalize(x); });
    return out;
  }

  friend bool operator==(const Normalizer&, const Normalizer&) = default;

 private:
  double mean_ = 0.0;
  double std_ = 1.0;
};

/// Training pairs (window of n samples -> sample at offset k past the window).
/// Inputs are stored row-major, one row per pair.
class SupervisedSet {
 public:
  SupervisedSet() = default;
  SupervisedSet(std::vector<double> inputs, std::vector<double> targets, std::size_t window,
                std::size_t offset)
      : inputs_(std::move(inputs)), targets_(std::move(targets)), window_(window), offset_(offset) {
    require(window_ >= 1, Errc::InvalidArgument, "window must be >= 1");
    require(inputs_.size() == targets_.size() * window_, Errc::DimensionMismatch,
            "inputs and targets disagree in length");
  }

  std::size_t size() const noexcept { return targets_.size(); }
  bool empty() const noexcept { return targets_.empty(); }
  std::size_t window() const noexcept { return window_; }
  std::size_t offset() const noexcept { return offset_; }

  std::span<const double> input(std::size_t i) const {
    return std::span<const double>(inputs_).subspan(i * window_, window_);
  }
  double target(std::size_t i) const { return targets_[i]; }
  std::span<const double> inputs() const noexcept { return inputs_; }
  std::span<const double> targets() const noexcept { return targets_; }

  /// Pairs at the given positions, in that order.
  SupervisedSet subset(std::span<const std::size_t> rows) const {
    std::vector<double> in;
    std::vector<double> tg;
    in.reserve(rows.size() * window_);
    tg.reserve(rows.size());
    for (std::size_t r : rows) {
      auto x = input(r);
      in.insert(in.end(), x.begin(), x.end());
      tg.push_back(targets_[r]);
    }
    return SupervisedSet(std::move(in), std::move(tg), window_, offset_);
  }

 private:
  std::vector<double> inputs_;
  std::vector<double> targets_;
  std::size_t window_ = 1;
  std::size_t offset_ = 1;
};

namespace detail {

inline bool is_missing(std::string_view field) {
  field = trim(field);
  return field.empty() || field == "?";
}

// "d/m/yyyy" + "hh:mm:ss" -> seconds since epoch; false when unparsable.
inline bool parse_uci_timestamp(std::string_view date, std::string_view time, Timestamp& out) {
  auto d = split_view(trim(date), '/');
  auto t = split_view(trim(time), ':');
  if (d.size() != 3 || t.size() != 3) return false;
  int v[6];
  std::string_view parts[6] = {d[0], d[1], d[2], t[0], t[1], t[2]};
  for (int i = 0; i < 6; ++i) {
    auto [p, ec] = std::from_chars(parts[i].data(), parts[i].data() + parts[i].size(), v[i]);
    if (ec != std::errc{} || p != parts[i].data() + parts[i].size()) return false;
  }
  using namespace std::chrono;
  const year_month_day ymd{year{v[2]}, month{static_cast<unsigned>(v[1])},
                           day{static_cast<unsigned>(v[0])}};
  if (!ymd.ok()) return false;
  out = sys_days{ymd} + hours{v[3]} + minutes{v[4]} + seconds{v[5]};
  return true;
}

}  // namespace detail

/// Reads one column of a `;`-separated household file (first line header,
/// `?` or empty = missing). Missing values are forward-filled; leading missing
/// values are dropped. Date/Time columns, when present, only set the start
/// timestamp.
inline TimeSeries parse_household_csv(const std::filesystem::path& path,
                                      const std::string& column = "Global_active_power") {
  std::ifstream in(path);
  if (!in) fail(Errc::FileNotFound, path.string());

  std::string line;
  if (!std::getline(in, line)) fail(Errc::MalformedRecord, "line 1: missing header");
  const auto header = split_view(trim(line), ';');
  std::vector<std::string> names;
  for (auto h : header) names.emplace_back(trim(h));

  const auto col_it = std::find(names.begin(), names.end(), column);
  if (col_it == names.end()) fail(Errc::UnknownColumn, column);
  const std::size_t col = static_cast<std::size_t>(col_it - names.begin());
  const auto date_it = std::find(names.begin(), names.end(), "Date");
  const auto time_it = std::find(names.begin(), names.end(), "Time");
  const bool has_clock = date_it != names.end() && time_it != names.end();
  const std::size_t date_col = static_cast<std::size_t>(date_it - names.begin());
  const std::size_t time_col = static_cast<std::size_t>(time_it - names.begin());

  std::vector<double> values;
  std::vector<std::size_t> imputed;
  Timestamp start{};
  bool have_value = false;
  double last = 0.0;
  std::size_t line_no = 1;
  std::size_t blank_run = 0;

  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view rec = trim(line);
    if (rec.empty()) {
      ++blank_run;
      continue;
    }
    if (blank_run > 0) fail(Errc::MalformedRecord, "line " + std::to_string(line_no - 1) + ": empty record");
    const auto fields = split_view(rec, ';');
    if (fields.size() != names.size()) {
      fail(Errc::MalformedRecord, "line " + std::to_string(line_no) + ": expected " +
                                      std::to_string(names.size()) + " fields, found " +
                                      std::to_string(fields.size()));
    }

    double v = 0.0;
    bool present = !detail::is_missing(fields[col]);
    if (present) {
      if (!try_parse_double(fields[col], v)) {
        fail(Errc::MalformedRecord, "line " + std::to_string(line_no) + ": bad number '" +
                                        std::string(fields[col]) + "'");
      }
      present = std::isfinite(v);
    }

    if (!present) {
      if (!have_value) continue;  // leading gap is dropped
      imputed.push_back(values.size());
      values.push_back(last);
      continue;
    }
    if (!have_value) {
      have_value = true;
      if (has_clock && !detail::parse_uci_timestamp(fields[date_col], fields[time_col], start)) {
        fail(Errc::MalformedRecord, "line " + std::to_string(line_no) + ": bad Date/Time");
      }
    }
    last = v;
    values.push_back(v);
  }

  if (!have_value) fail(Errc::AllMissing, "column '" + column + "' has no parsable value");
  return TimeSeries(std::move(values), start, std::chrono::seconds{60}, std::move(imputed));
}

/// Fits mean and sample std (N-1) over [fit_first, fit_first + fit_count) and
/// applies the scaling to every sample.
inline std::pair<Normalizer, TimeSeries> standardize(const TimeSeries& series, std::size_t fit_first,
                                                     std::size_t fit_count) {
  require(fit_count > 0, Errc::EmptyRange, "empty fit range");
  require(fit_first < series.size() && fit_count <= series.size() - fit_first, Errc::EmptyRange,
          "fit range outside the series");
  require(fit_count >= 2, Errc::DegenerateRange, "a single sample has no spread");

  const auto xs = series.values().subspan(fit_first, fit_count);
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(fit_count);
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(fit_count - 1));
  require(sd > 0.0, Errc::DegenerateRange, "fit range has zero variance");

  Normalizer norm(mean, sd);
  std::vector<std::size_t> imp(series.imputed_indices().begin(), series.imputed_indices().end());
  return {norm, TimeSeries(norm.normalize(series.values()), series.start(), series.step(), std::move(imp))};
}

inline std::pair<Normalizer, TimeSeries> standardize(const TimeSeries& series) {
  return standardize(series, 0, series.size());
}

/// Pair i (0-based) maps x[i .. i+n-1] to x[i+n-1+k]; there are L - n - k + 1 pairs.
inline SupervisedSet make_supervised(std::span<const double> xs, std::size_t n, std::size_t k) {
  require(n >= 1 && k >= 1, Errc::InvalidArgument, "window and offset must be >= 1");
  require(xs.size() >= n + k, Errc::SeriesTooShort,
          "need " + std::to_string(n + k) + " samples, have " + std::to_string(xs.size()));
  const std::size_t count = xs.size() - n - k + 1;
  std::vector<double> inputs;
  inputs.reserve(count * n);
  std::vector<double> targets(count);
  for (std::size_t i = 0; i < count; ++i) {
    inputs.insert(inputs.end(), xs.begin() + i, xs.begin() + i + n);
    targets[i] = xs[i + n - 1 + k];
  }
  return SupervisedSet(std::move(inputs), std::move(targets), n, k);
}

inline SupervisedSet make_supervised(const TimeSeries& series, std::size_t n, std::size_t k) {
  return make_supervised(series.values(), n, k);
}

/// Chronological prefix split: train = [0, train_len), test = [train_len, train_len + test_len).
inline std::pair<TimeSeries, TimeSeries> split(const TimeSeries& series, std::size_t train_len,
                                               std::size_t test_len) {
  require(train_len <= series.size() && test_len <= series.size() - train_len, Errc::SeriesTooShort,
          "train + test exceeds series length");
  return {series.slice(0, train_len), series.slice(train_len, test_len)};
}

// Series file: a small text container written by `gridcast ingest`.
//
//   gridcast-series 1
//   start <unix seconds>
//   step <seconds>
//   imputed <count> <index>...
//   values <count>
//   <one value per line>

inline void write_series(const TimeSeries& s, std::ostream& out) {
  out << "gridcast-series 1\n";
  out << "start " << s.start().time_since_epoch().count() << "\n";
  out << "step " << s.step().count() << "\n";
  out << "imputed " << s.imputed_count();
  for (std::size_t i : s.imputed_indices()) out << ' ' << i;
  out << "\nvalues " << s.size() << "\n";
  for (double v : s.values()) out << format_double(v) << "\n";
}

inline void save_series(const TimeSeries& s, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::IoError, "cannot write " + path.string());
  write_series(s, out);
  if (!out) fail(Errc::IoError, "write failed: " + path.string());
}

inline TimeSeries read_series(std::istream& in) {
  std::string line;
  auto expect = [&](std::string_view key) {
    if (!std::getline(in, line)) fail(Errc::Format, "series: missing '" + std::string(key) + "'");
    auto parts = split_view(trim(line), ' ');
    if (parts.empty() || parts[0] != key) fail(Errc::Format, "series: expected '" + std::string(key) + "'");
    return parts;
  };
  auto head = expect("gridcast-series");
  if (head.size() != 2 || head[1] != "1") fail(Errc::Format, "series: unsupported version");
  const auto start = parse_int(expect("start").at(1));
  const auto step = parse_int(expect("step").at(1));
  auto imp = expect("imputed");
  const auto n_imp = static_cast<std::size_t>(parse_int(imp.at(1)));
  if (imp.size() != n_imp + 2) fail(Errc::Format, "series: imputed count mismatch");
  std::vector<std::size_t> imputed;
  for (std::size_t i = 0; i < n_imp; ++i) imputed.push_back(static_cast<std::size_t>(parse_int(imp[i + 2])));
  const auto count = static_cast<std::size_t>(parse_int(expect("values").at(1)));
  std::vector<double> values;
  values.reserve(count);
  while (values.size() < count && std::getline(in, line)) values.push_back(parse_double(line));
  if (values.size() != count) fail(Errc::Format, "series: truncated values");
  return TimeSeries(std::move(values), Timestamp{std::chrono::seconds{start}}, std::chrono::seconds{step},
                    std::move(imputed));
}

inline TimeSeries load_series(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::FileNotFound, path.string());
  return read_series(in);
}

/// Accepts either a series file or a raw household file.
inline TimeSeries load_any_series(const std::filesystem::path& path,
                                  const std::string& column = "Global_active_power") {
  std::ifstream in(path);
  if (!in) fail(Errc::FileNotFound, path.string());
  std::string first;
  std::getline(in, first);
  if (trim(first).starts_with("gridcast-series")) return load_series(path);
  return parse_household_csv(path, column);
}

}  // namespace gridcast
