#pragma once

#include <stdexcept>
#include <string>

namespace tlreg {

enum class ErrorKind {
  kGridTooLarge,
  kInvalidKernelParameter,
  kDimensionMismatch,
  kInvalidArgument,
  kInfeasibleSet,
  kInfeasibleProblem,
  kNonConvergence,
  kNotASlaterPoint,
  kAlphaNonPositive,
  kOracleTooLarge,
  kNoFeasiblePattern,
  kEmptyPath,
  kZeroSourceNorm,
  kNoTransition,
  kInvalidRule,
  kLambdaExceedsSlaterCap,
  kConfigError,
};

const char* to_string(ErrorKind kind);

/// Every failure raised by the library carries one of the kinds above so
/// that callers (the CLI in particular) can map it onto an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kGridTooLarge: return "GridTooLarge";
    case ErrorKind::kInvalidKernelParameter: return "InvalidKernelParameter";
    case ErrorKind::kDimensionMismatch: return "DimensionMismatch";
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kInfeasibleSet: return "InfeasibleSet";
    case ErrorKind::kInfeasibleProblem: return "InfeasibleProblem";
    case ErrorKind::kNonConvergence: return "NonConvergence";
    case ErrorKind::kNotASlaterPoint: return "NotASlaterPoint";
    case ErrorKind::kAlphaNonPositive: return "AlphaNonPositive";
    case ErrorKind::kOracleTooLarge: return "OracleTooLarge";
    case ErrorKind::kNoFeasiblePattern: return "NoFeasiblePattern";
    case ErrorKind::kEmptyPath: return "EmptyPath";
    case ErrorKind::kZeroSourceNorm: return "ZeroSourceNorm";
    case ErrorKind::kNoTransition: return "NoTransition";
    case ErrorKind::kInvalidRule: return "InvalidRule";
    case ErrorKind::kLambdaExceedsSlaterCap: return "LambdaExceedsSlaterCap";
    case ErrorKind::kConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace tlreg
