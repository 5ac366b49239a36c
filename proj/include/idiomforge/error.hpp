#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace idiomforge {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value or file that does not satisfy its format or invariants.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Network or provider failure that survived every retry.
class TransportError : public Error {
 public:
  using Error::Error;
};

/// Provider rejected the request (auth, malformed request); never retried.
class ProviderError : public Error {
 public:
  using Error::Error;
};

class FixtureMissError : public Error {
 public:
  explicit FixtureMissError(const std::string& digest)
      : Error("no fixture for request digest " + digest), digest_(digest) {}

  const std::string& digest() const noexcept { return digest_; }

 private:
  std::string digest_;
};

class TemplateError : public Error {
 public:
  using Error::Error;
};

}  // namespace idiomforge
