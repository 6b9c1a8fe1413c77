#pragma once

#include <stdexcept>
#include <string>

namespace chaoslink {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Argument outside an operation's mathematical domain.
class DomainError : public Error {
public:
  using Error::Error;
};

// Bad configuration text or a parameter that violates its invariant.
class ConfigError : public Error {
public:
  ConfigError(std::string key, const std::string &what)
      : Error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}

  const std::string &key() const noexcept { return key_; }

private:
  std::string key_;
};

// Non-finite state, trajectory escape, or event localization failure.
class NumericError : public Error {
public:
  using Error::Error;
};

class EventError : public NumericError {
public:
  using NumericError::NumericError;
};

} // namespace chaoslink
