#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace signpred {

/// Base for all recoverable failures raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad or inconsistent parameters (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Unreadable or malformed input data (CLI exit code 3).
class DataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A violated internal invariant (CLI exit code 4).
class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace signpred
