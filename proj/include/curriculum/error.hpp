#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace curriculum {

enum class ErrorKind {
  kValidation,
  kParse,
  kIo,
  kUnsupported,
  kNumeric,
  kDimension,
  kUndefined,
};

std::string_view to_string(ErrorKind kind);

// All library failures are reported through this exception; `kind()` is what
// the CLI writes into its machine-readable error record.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace curriculum
