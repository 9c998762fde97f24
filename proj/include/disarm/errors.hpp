#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace disarm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rule-file syntax error with 1-based position and the expected token set.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::size_t column, std::string message, std::vector<std::string> expected = {})
      : Error(format(line, column, message, expected)),
        line_(line),
        column_(column),
        detail_(std::move(message)),
        expected_(std::move(expected)) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }
  const std::string& detail() const { return detail_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  static std::string format(std::size_t line, std::size_t column, const std::string& message,
                            const std::vector<std::string>& expected) {
    std::string out = std::to_string(line) + ":" + std::to_string(column) + ": " + message;
    if (!expected.empty()) {
      out += " (expected ";
      for (std::size_t i = 0; i < expected.size(); ++i) {
        if (i > 0) out += i + 1 == expected.size() ? " or " : ", ";
        out += expected[i];
      }
      out += ")";
    }
    return out;
  }

  std::size_t line_;
  std::size_t column_;
  std::string detail_;
  std::vector<std::string> expected_;
};

/// Structurally valid syntax that violates a program-level invariant
/// (duplicate rule id, superiority naming an unknown rule).
class ProgramError : public Error {
 public:
  using Error::Error;
};

/// Raised when a theory cannot be evaluated: cyclic superiority, a rule that
/// is not range-restricted, negation-as-failure through a recursive cycle,
/// or a builtin that cannot be computed.
class EngineError : public Error {
 public:
  using Error::Error;
};

}  // namespace disarm
