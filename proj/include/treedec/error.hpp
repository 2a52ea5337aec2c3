#pragma once

#include <stdexcept>
#include <string>

namespace treedec {

enum class ErrorCode {
  RankDeficient,
  SingularDiagonal,
  DimensionMismatch,
  Overflow,
  IncompatibleBoundary,
  InvalidPolicy,
  TooLarge,
  InvalidTaps,
  RankDeficientCode,
  ConfigError,
  AlignmentError,
};

const char* to_string(ErrorCode code) noexcept;

/// Single exception type for the library; `code()` distinguishes the cause.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::SingularDiagonal: return "SingularDiagonal";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::Overflow: return "Overflow";
    case ErrorCode::IncompatibleBoundary: return "IncompatibleBoundary";
    case ErrorCode::InvalidPolicy: return "InvalidPolicy";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::InvalidTaps: return "InvalidTaps";
    case ErrorCode::RankDeficientCode: return "RankDeficientCode";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::AlignmentError: return "AlignmentError";
  }
  return "Unknown";
}

}  // namespace treedec
