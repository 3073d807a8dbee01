#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tempervi {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Bad argument to a pure function (e.g. T < 1, t_min != 1).
class ArgumentError : public Error {
public:
  using Error::Error;
};

// Inconsistent configuration: missing partition table, grid mismatch, bad rate.
class ConfigError : public Error {
public:
  using Error::Error;
};

// Variational parameters left their valid domain.
class InvalidStateError : public Error {
public:
  using Error::Error;
};

class NumericError : public Error {
public:
  using Error::Error;
};

class EstimationError : public Error {
public:
  using Error::Error;
};

class EvaluationError : public Error {
public:
  using Error::Error;
};

class ValidationError : public Error {
public:
  using Error::Error;
};

class ParseError : public Error {
public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

}  // namespace tempervi
