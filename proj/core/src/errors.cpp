#include "proxflow/errors.hpp"

namespace proxflow {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NumericalBreakdown: return "NumericalBreakdown";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::BadLambda: return "BadLambda";
    case ErrorKind::ZeroResidual: return "ZeroResidual";
    case ErrorKind::ZeroGradient: return "ZeroGradient";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::BadK: return "BadK";
    case ErrorKind::CertificateRejected: return "CertificateRejected";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ValidationError: return "ValidationError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

}  // namespace proxflow
