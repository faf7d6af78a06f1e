#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dqap {

// Raised for malformed inputs: odd chain length, invalid subsystems, bad schedules.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical routine failed to converge or produced non-finite values.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The Resta expectation value is too close to zero for its phase to carry information.
class IndeterminatePolarization : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : std::runtime_error(what + " (line " + std::to_string(line) + ", column " +
                           std::to_string(column) + ")"),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace dqap
