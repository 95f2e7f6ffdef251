#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace osslc {

enum class ErrorKind {
  // ingest
  MissingFile,
  SchemaError,
  InvariantViolation,
  AuthError,
  RateLimited,
  PartialData,
  // features / tables
  InvalidThreshold,
  ColumnMismatch,
  MissingFeatureColumn,
  UnknownLabel,
  // learning
  EmptyInput,
  DimensionMismatch,
  UnlabeledRow,
  ClassTooSmall,
  InvalidHyperparam,
  NonConvergence,
  KTooLarge,
  EmptyGrid,
  NotProbabilistic,
  UnsupportedFormat,
  // evaluation / diagnostics
  LengthMismatch,
  EmptyMatrix,
  ConstantColumn,
  SampleSizeOutOfRange,
  SingularCovariance,
  // plumbing
  ConfigError,
  IoError,
  Precondition,
};

std::string_view to_string(ErrorKind kind);

/// Every failure in the library surfaces as an Error carrying a kind, so the
/// CLI can map it to an exit code without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  // Returns a copy whose message is prefixed with `context: `.
  Error annotated(std::string_view context) const {
    return Error(kind_, std::string(context) + ": " + what());
  }

 private:
  ErrorKind kind_;
};

/// RateLimited errors also carry the server's retry-after hint in seconds.
class RateLimitedError : public Error {
 public:
  RateLimitedError(const std::string& message, double retry_after_seconds)
      : Error(ErrorKind::RateLimited, message),
        retry_after_(retry_after_seconds) {}
  double retry_after_seconds() const noexcept { return retry_after_; }

 private:
  double retry_after_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace osslc
