#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ladg {

// Dimension or rank mismatch between operands.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input left the numerical domain of an operation: non-SPD matrix handed to a
// Cholesky, singular system, log of a non-positive entry, ...
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Structurally valid input on which the operation is undefined, e.g. a
// zero-norm feature row where a cosine is needed.
class DegenerateInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Iteration budget exhausted before reaching the requested tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// API used out of order (e.g. reading a moving average before initialization).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Invalid configuration; message lists every failed check.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed file content; carries the 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// File parsed but does not match the declared schema.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ladg
