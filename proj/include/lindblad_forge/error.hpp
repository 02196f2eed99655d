#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lindblad_forge {

enum class ErrorCode {
  InvalidArgument,
  NonHermitianInput,
  DimensionMismatch,
  SingularResolvent,
  NonHermitianKossakowski,
  NotPSD,
  MaxRefinement,
  DimensionCap,
  TruncationUnconverged,
  NonPositiveValue,
  GridMismatch,
  DegenerateNormalization,
  ConfigError,
  ExactUnavailable,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonHermitianInput: return "NonHermitianInput";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SingularResolvent: return "SingularResolvent";
    case ErrorCode::NonHermitianKossakowski: return "NonHermitianKossakowski";
    case ErrorCode::NotPSD: return "NotPSD";
    case ErrorCode::MaxRefinement: return "MaxRefinement";
    case ErrorCode::DimensionCap: return "DimensionCap";
    case ErrorCode::TruncationUnconverged: return "TruncationUnconverged";
    case ErrorCode::NonPositiveValue: return "NonPositiveValue";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::DegenerateNormalization: return "DegenerateNormalization";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::ExactUnavailable: return "ExactUnavailable";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace lindblad_forge
