#pragma once

#include <stdexcept>
#include <string>

namespace stirap {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user input: malformed config, inconsistent pulse layout, negative rates.
/// The CLI maps this family to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure of an otherwise well-formed computation (exit code 3).
class NumericalError : public Error {
 public:
  using Error::Error;
};

class InvalidStateError : public Error {
 public:
  using Error::Error;
};

class InvalidPulseError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class SingularPointError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class UndefinedFrameError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NonDispersiveError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class IntegrationError : public NumericalError {
 public:
  IntegrationError(const std::string& what, long step)
      : NumericalError(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  long step() const noexcept { return step_; }

 private:
  long step_;
};

class SingularDesignError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NonAdiabaticError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace stirap
