#ifndef TGEN_ERRORS_HPP
#define TGEN_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tgen {

// Malformed input text (bad row, bad config line). Carries a 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, std::size_t line)
      : std::runtime_error(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Input parsed but violates a data contract (negative values, empty dataset,
// degenerate variance, unpaired flows).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure (non-finite parameters, domain violations, diverging loss).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem failure.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace tgen

#endif  // TGEN_ERRORS_HPP
