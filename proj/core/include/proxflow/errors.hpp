#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace proxflow {

enum class ErrorKind {
  DimensionMismatch,
  NumericalBreakdown,
  NoConvergence,
  BadLambda,
  ZeroResidual,
  ZeroGradient,
  InsufficientData,
  BadK,
  CertificateRejected,
  ParseError,
  ValidationError,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries one of the kinds above so
/// callers (and the CLI exit-code mapping) can branch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace proxflow
