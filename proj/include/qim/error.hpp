#pragma once

#include <stdexcept>
#include <string>

namespace qim {

enum class ErrorCode {
  ZeroDimension,
  DimensionMismatch,
  SingularDenominator,
  DomainError,
  ZeroSignal,
  NonFinite,
  InvalidConfig,
  Io,
};

const char* to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (notably the CLI) can map it to an exit status.
class QimError : public std::runtime_error {
 public:
  QimError(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace qim
