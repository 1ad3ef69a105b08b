#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cellcov {

// Invalid numeric parameter (delta outside (0,1], r >= p, n too small...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Mathematically undefined request, e.g. effective rank of the zero matrix.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DetectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ImputationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file. line is 1-based; column is 1-based or 0 when unknown.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column = 0)
      : std::runtime_error(what), line_(line), column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace cellcov
