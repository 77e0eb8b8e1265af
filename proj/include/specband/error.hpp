#pragma once

#include <stdexcept>
#include <string>

namespace specband {

enum class ErrorCode {
  InvalidArgument,
  NotRegular,
  EdgeSingularity,
  OutsideSpectrum,
  SingleBand,
  RangeExceeded,
  SpectralParameterOnAxis,
  NoConvergence,
  DomainTooSmall,
  TruncationTooTight,
  LossOfOrthogonality,
  IllConditioned,
  DivergentTruncation,
  ThetaDivisor,
  PoorFit,
  NonConfining,
  InsufficientSamples
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NotRegular: return "NotRegular";
    case ErrorCode::EdgeSingularity: return "EdgeSingularity";
    case ErrorCode::OutsideSpectrum: return "OutsideSpectrum";
    case ErrorCode::SingleBand: return "SingleBand";
    case ErrorCode::RangeExceeded: return "RangeExceeded";
    case ErrorCode::SpectralParameterOnAxis: return "SpectralParameterOnAxis";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::DomainTooSmall: return "DomainTooSmall";
    case ErrorCode::TruncationTooTight: return "TruncationTooTight";
    case ErrorCode::LossOfOrthogonality: return "LossOfOrthogonality";
    case ErrorCode::IllConditioned: return "IllConditioned";
    case ErrorCode::DivergentTruncation: return "DivergentTruncation";
    case ErrorCode::ThetaDivisor: return "ThetaDivisor";
    case ErrorCode::PoorFit: return "PoorFit";
    case ErrorCode::NonConfining: return "NonConfining";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
  }
  return "Unknown";
}

// Errors caused by bad inputs, as opposed to a numerical method giving up.
inline bool is_validation_error(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::NotRegular:
    case ErrorCode::EdgeSingularity:
    case ErrorCode::OutsideSpectrum:
    case ErrorCode::SingleBand:
    case ErrorCode::RangeExceeded:
    case ErrorCode::SpectralParameterOnAxis:
      return true;
    default:
      return false;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string module, std::string operation, const std::string& detail)
      : std::runtime_error(module + "::" + operation + ": " + error_code_name(code) + ": " + detail),
        code_(code),
        module_(std::move(module)),
        operation_(std::move(operation)) {}

  ErrorCode code() const { return code_; }
  const std::string& module() const { return module_; }
  const std::string& operation() const { return operation_; }

 private:
  ErrorCode code_;
  std::string module_;
  std::string operation_;
};

}  // namespace specband
