#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace heatlab {

enum class ErrorKind {
  NonPositiveExtent,
  OddPointCount,
  TooFewNodes,
  UnsupportedDimension,
  NonFiniteSample,
  GridMismatch,
  DiffusivityMismatch,
  OverflowInInverseGaussWeight,
  NonPositiveTime,
  OrderTooHigh,
  EvaluationPastBlowUp,
  NotPowerOfTwo,
  TailEscape,
  NonIntegrableData,
  DataNotSupportedInHalfLine,
  RescaledArgumentOffGrid,
  TooFewPoints,
  MassMismatch,
  ZeroErrorEntry,
  RateNotDecreasing,
  NonPositiveField,
  NoSignChangeOnGrid,
  NegativeDensity,
  GridTooSmall,
  InvalidArgument,
  ConfigInvalid,
  IoFailure,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonPositiveExtent: return "NonPositiveExtent";
    case ErrorKind::OddPointCount: return "OddPointCount";
    case ErrorKind::TooFewNodes: return "TooFewNodes";
    case ErrorKind::UnsupportedDimension: return "UnsupportedDimension";
    case ErrorKind::NonFiniteSample: return "NonFiniteSample";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::DiffusivityMismatch: return "DiffusivityMismatch";
    case ErrorKind::OverflowInInverseGaussWeight: return "OverflowInInverseGaussWeight";
    case ErrorKind::NonPositiveTime: return "NonPositiveTime";
    case ErrorKind::OrderTooHigh: return "OrderTooHigh";
    case ErrorKind::EvaluationPastBlowUp: return "EvaluationPastBlowUp";
    case ErrorKind::NotPowerOfTwo: return "NotPowerOfTwo";
    case ErrorKind::TailEscape: return "TailEscape";
    case ErrorKind::NonIntegrableData: return "NonIntegrableData";
    case ErrorKind::DataNotSupportedInHalfLine: return "DataNotSupportedInHalfLine";
    case ErrorKind::RescaledArgumentOffGrid: return "RescaledArgumentOffGrid";
    case ErrorKind::TooFewPoints: return "TooFewPoints";
    case ErrorKind::MassMismatch: return "MassMismatch";
    case ErrorKind::ZeroErrorEntry: return "ZeroErrorEntry";
    case ErrorKind::RateNotDecreasing: return "RateNotDecreasing";
    case ErrorKind::NonPositiveField: return "NonPositiveField";
    case ErrorKind::NoSignChangeOnGrid: return "NoSignChangeOnGrid";
    case ErrorKind::NegativeDensity: return "NegativeDensity";
    case ErrorKind::GridTooSmall: return "GridTooSmall";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
    case ErrorKind::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the ErrorKind tags so
/// callers (the CLI in particular) can map it onto an exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) fail(kind, what);
}

}  // namespace heatlab
