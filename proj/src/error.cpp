#include "scenefuse/error.hpp"

namespace scenefuse {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::NonFinite: return "non-finite";
    case ErrorKind::DimensionMismatch: return "dimension-mismatch";
    case ErrorKind::Io: return "io";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Format: return "format";
    case ErrorKind::Truncated: return "truncated";
    case ErrorKind::Checksum: return "checksum";
    case ErrorKind::Model: return "model";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Convergence: return "convergence";
    case ErrorKind::EmptyClass: return "empty-class";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

}  // namespace scenefuse
