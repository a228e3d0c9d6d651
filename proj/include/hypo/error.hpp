#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hypo {

enum class ErrorCode {
  DimensionMismatch,
  NonIncreasingViolation,
  RankDeficientBlock,
  NonZeroOutsideBlocks,
  NonPositiveLambda,
  NonPositiveTau,
  InvalidProfile,
  IllConditionedCovariance,
  DegenerateInterval,
  BreakpointEvaluation,
  GridCoverage,
  OutOfWindow,
  ZeroDenominator,
  ExponentTooSmall,
  BadGrid,
  NonPSDDiffusion,
  HorizonExceeded,
  EmptyEnsemble,
  ShapeMismatch,
  NoConvergence,
  MissingDerivatives,
  SingularExtension,
  DerivativeBoundUnachievable,
  InvalidArgument,
  ConfigError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonIncreasingViolation: return "NonIncreasingViolation";
    case ErrorCode::RankDeficientBlock: return "RankDeficientBlock";
    case ErrorCode::NonZeroOutsideBlocks: return "NonZeroOutsideBlocks";
    case ErrorCode::NonPositiveLambda: return "NonPositiveLambda";
    case ErrorCode::NonPositiveTau: return "NonPositiveTau";
    case ErrorCode::InvalidProfile: return "InvalidProfile";
    case ErrorCode::IllConditionedCovariance: return "IllConditionedCovariance";
    case ErrorCode::DegenerateInterval: return "DegenerateInterval";
    case ErrorCode::BreakpointEvaluation: return "BreakpointEvaluation";
    case ErrorCode::GridCoverage: return "GridCoverage";
    case ErrorCode::OutOfWindow: return "OutOfWindow";
    case ErrorCode::ZeroDenominator: return "ZeroDenominator";
    case ErrorCode::ExponentTooSmall: return "ExponentTooSmall";
    case ErrorCode::BadGrid: return "BadGrid";
    case ErrorCode::NonPSDDiffusion: return "NonPSDDiffusion";
    case ErrorCode::HorizonExceeded: return "HorizonExceeded";
    case ErrorCode::EmptyEnsemble: return "EmptyEnsemble";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::MissingDerivatives: return "MissingDerivatives";
    case ErrorCode::SingularExtension: return "SingularExtension";
    case ErrorCode::DerivativeBoundUnachievable: return "DerivativeBoundUnachievable";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Every recoverable failure in the library is reported through this type.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) throw Error(code, what);
}

}  // namespace hypo
