#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pfmot {

/// Root of all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter or input violates a documented precondition.
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// A configuration file or flag could not be resolved into valid settings.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Jacobian or innovation matrix is singular.
class SingularityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// A pseudo-time step of the particle flow is not invertible.
class InvertibilityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Weights or probabilities carry no mass where some is required.
class DegenerateError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Malformed row in an input file. `line()` is 1-based and counts the header.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}

  [[nodiscard]] std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace pfmot
