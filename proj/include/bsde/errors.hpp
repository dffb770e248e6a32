#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bsde {

enum class ErrorCode {
  DimensionMismatch,
  NotSymmetric,
  NonPSD,
  NonPD,
  SingularSigma,
  NonFinite,
  InvalidGrid,
  TooFewSamples,
  SingularCovariance,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code);

/// Every recoverable failure in the library is reported as a bsde::Error
/// carrying a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace bsde
