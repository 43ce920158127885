#pragma once

#include <stdexcept>
#include <string>

namespace bodegen {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// A documented precondition was violated by the caller.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

/// The covariance matrix could not be factorized even at the largest jitter.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

/// The sandbox could not be prepared (runtime missing, temp dir failure, ...).
/// Distinct from a program failing its tests.
class SandboxSetupError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// Error reported by the bridge service itself: {"error": {"code", "message"}}.
class BackendError : public Error {
 public:
  BackendError(std::string code, const std::string& message)
      : Error(code + ": " + message), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

/// Malformed task file or run log. `location` names the line or field.
class ParseError : public Error {
 public:
  ParseError(std::string location, const std::string& message)
      : Error(location + ": " + message), location_(std::move(location)) {}
  const std::string& location() const { return location_; }

 private:
  std::string location_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace bodegen
