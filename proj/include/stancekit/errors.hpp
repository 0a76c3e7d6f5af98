#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stancekit {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A linear solve or factorization failed (non-PSD Gram, NaN sites, ...).
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Invalid parameters, plans or configuration files.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace stancekit
