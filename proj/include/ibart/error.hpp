#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ibart {

// Root of every exception thrown by the library. The CLI maps the concrete
// subclasses onto stable exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input: malformed configuration, missing columns, invalid ranges.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Numerical failure: no signal found, subset budget exceeded, non-finite data.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, std::size_t position)
      : ValidationError(what + " at position " + std::to_string(position)),
        position_(position) {}

  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

// An operator was applied outside its domain, or produced a value beyond the
// magnitude cap.
class DomainError : public NumericalError {
 public:
  DomainError(const std::string& op, std::size_t row, double value)
      : NumericalError("domain violation in " + op + " at row " +
                       std::to_string(row) + " (value " +
                       std::to_string(value) + ")"),
        op_(op),
        row_(row) {}

  const std::string& op() const { return op_; }
  std::size_t row() const { return row_; }

 private:
  std::string op_;
  std::size_t row_;
};

}  // namespace ibart
