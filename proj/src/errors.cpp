#include "bsde/errors.hpp"

namespace bsde {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::NonPSD: return "NonPSD";
    case ErrorCode::NonPD: return "NonPD";
    case ErrorCode::SingularSigma: return "SingularSigma";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::InvalidGrid: return "InvalidGrid";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace bsde
