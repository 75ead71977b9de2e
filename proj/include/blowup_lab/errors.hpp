#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace blowup_lab {

enum class ErrorKind {
  InvalidArgument,
  UnsupportedMoment,
  OutOfDomain,
  InvalidProblem,
  NanState,
  LikelyGlobalSolution,
  NotBlowingUp,
  InsufficientData,
  AmbiguousLocation,
  InvalidTime,
  EmptySweep,
  Theorem3Inapplicable,
  ConfigError,
};

std::string_view to_string(ErrorKind kind);

// All library failures are reported through this one exception type; callers
// branch on kind() rather than on the message text.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace blowup_lab
