#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace scenefuse {

enum class ErrorKind {
  InvalidArgument,
  NonFinite,
  DimensionMismatch,
  Io,
  Parse,
  Format,
  Truncated,
  Checksum,
  Model,
  Shape,
  Convergence,
  EmptyClass,
};

std::string_view to_string(ErrorKind kind);

// Every failure the library reports carries a kind so the CLI can emit a
// stable machine-parsable code next to the human message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace scenefuse
