#pragma once

#include <stdexcept>
#include <string>

namespace usejudge {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or invalid input file. `line` is 1-based, 0 when not line-specific.
class InputError : public Error {
 public:
  InputError(const std::string& message, std::size_t line = 0)
      : Error(line == 0 ? message : "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Inconsistent or incomplete configuration (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Transport-level failure talking to a model backend.
class BackendError : public Error {
 public:
  using Error::Error;
};

/// A model response that could not be turned into the expected structure.
class ResponseParseError : public Error {
 public:
  ResponseParseError(const std::string& message, std::string raw)
      : Error(message), raw_(std::move(raw)) {}

  const std::string& raw() const noexcept { return raw_; }

 private:
  std::string raw_;
};

}  // namespace usejudge
