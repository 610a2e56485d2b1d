#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wrdyn {

enum class ErrorCode {
  NonHermitianInput,
  IndefiniteInput,
  DegenerateInput,
  DimensionMismatch,
  ZeroVector,
  NotUnitVector,
  WeightTooLarge,
  WeightOutOfRange,
  EmptySupport,
  NotStrictlyPositive,
  NotConverged,
  NotDecoupled,
  InvalidStart,
  IncompatibleTraces,
  InvalidConfig,
  NumericalBreakdown,
  SpecError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonHermitianInput: return "NonHermitianInput";
    case ErrorCode::IndefiniteInput: return "IndefiniteInput";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::NotUnitVector: return "NotUnitVector";
    case ErrorCode::WeightTooLarge: return "WeightTooLarge";
    case ErrorCode::WeightOutOfRange: return "WeightOutOfRange";
    case ErrorCode::EmptySupport: return "EmptySupport";
    case ErrorCode::NotStrictlyPositive: return "NotStrictlyPositive";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::NotDecoupled: return "NotDecoupled";
    case ErrorCode::InvalidStart: return "InvalidStart";
    case ErrorCode::IncompatibleTraces: return "IncompatibleTraces";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::NumericalBreakdown: return "NumericalBreakdown";
    case ErrorCode::SpecError: return "SpecError";
  }
  return "Unknown";
}

/// Single exception type for the library; the code identifies the failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace wrdyn
