#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ccramp {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  NotHermitian,
  NotPSD,
  CovarianceMismatch,
  DegenerateOracle,
  DimensionTooLarge,
  SingularStep,
  InternalCheck,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotHermitian: return "NotHermitian";
    case ErrorCode::NotPSD: return "NotPSD";
    case ErrorCode::CovarianceMismatch: return "CovarianceMismatch";
    case ErrorCode::DegenerateOracle: return "DegenerateOracle";
    case ErrorCode::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorCode::SingularStep: return "SingularStep";
    case ErrorCode::InternalCheck: return "InternalCheck";
  }
  return "Unknown";
}

/// Library-wide exception. The code names the violated condition.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ccramp
