#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace releaseflow {

enum class ErrorKind {
  InvalidArgument,
  Io,
  Parse,
  NonMonotoneTime,
  LengthMismatch,
  FractionOutOfRange,
  DegenerateCurve,
  UnknownModel,
  NonFiniteLoss,
  DropoutDisabled,
  DivergentTrajectory,
  MissingFilm,
  WrongCurveLength,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Every recoverable failure in the library is reported through this type; the
// kind lets callers (the CLI in particular) map failures to exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Training divergence; carries the epoch at which the loss stopped being finite.
class NonFiniteLossError : public Error {
 public:
  NonFiniteLossError(int epoch, const std::string& message)
      : Error(ErrorKind::NonFiniteLoss, message), epoch_(epoch) {}

  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorKind::InvalidArgument, message);
}

}  // namespace releaseflow
