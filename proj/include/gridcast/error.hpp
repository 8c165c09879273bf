#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace gridcast {

enum class Errc {
  FileNotFound,
  MalformedRecord,
  UnknownColumn,
  AllMissing,
  EmptyRange,
  DegenerateRange,
  SeriesTooShort,
  SingularNormalEquations,
  NoFeasibleOrder,
  InsufficientHistory,
  DimensionMismatch,
  ShapeMismatch,
  EmptyDataset,
  InvalidArgument,
  SingularSystem,
  NonFiniteObjective,
  NonFiniteGradient,
  InsufficientValidation,
  MismatchedEnsembles,
  TooFewForecasts,
  Empty,
  IoError,
  Format,
  Training,
};

constexpr std::string_view to_string(Errc c) {
  switch (c) {
    case Errc::FileNotFound: return "FileNotFound";
    case Errc::MalformedRecord: return "MalformedRecord";
    case Errc::UnknownColumn: return "UnknownColumn";
    case Errc::AllMissing: return "AllMissing";
    case Errc::EmptyRange: return "EmptyRange";
    case Errc::DegenerateRange: return "DegenerateRange";
    case Errc::SeriesTooShort: return "SeriesTooShort";
    case Errc::SingularNormalEquations: return "SingularNormalEquations";
    case Errc::NoFeasibleOrder: return "NoFeasibleOrder";
    case Errc::InsufficientHistory: return "InsufficientHistory";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::SingularSystem: return "SingularSystem";
    case Errc::NonFiniteObjective: return "NonFiniteObjective";
    case Errc::NonFiniteGradient: return "NonFiniteGradient";
    case Errc::InsufficientValidation: return "InsufficientValidation";
    case Errc::MismatchedEnsembles: return "MismatchedEnsembles";
    case Errc::TooFewForecasts: return "TooFewForecasts";
    case Errc::Empty: return "Empty";
    case Errc::IoError: return "IoError";
    case Errc::Format: return "Format";
    case Errc::Training: return "Training";
  }
  return "Unknown";
}

/// Training-side failures map to exit code 3 in the CLI, everything else that
/// is not a usage error maps to 2.
constexpr bool is_training_failure(Errc c) {
  switch (c) {
    case Errc::SingularNormalEquations:
    case Errc::NoFeasibleOrder:
    case Errc::SingularSystem:
    case Errc::NonFiniteObjective:
    case Errc::NonFiniteGradient:
    case Errc::Training:
      return true;
    default:
      return false;
  }
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// A per-subproblem failure inside an ensemble, tagged with method and step.
class TrainingError : public Error {
 public:
  TrainingError(std::string method, std::size_t step, Errc cause, const std::string& what)
      : Error(Errc::Training,
              method + " step " + std::to_string(step) + ": " + what),
        method_(std::move(method)), step_(step), cause_(cause) {}

  const std::string& method() const noexcept { return method_; }
  std::size_t step() const noexcept { return step_; }
  Errc cause() const noexcept { return cause_; }

 private:
  std::string method_;
  std::size_t step_;
  Errc cause_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, Errc code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace gridcast
