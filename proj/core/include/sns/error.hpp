#pragma once

#include <stdexcept>
#include <string>

namespace sns {

// Base of everything the library throws. Each subclass maps to one CLI
// exit code, so callers can distinguish bad configuration, bad input data
// and numerical failure without parsing messages.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

// Tensor shape mismatch.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of an op (log of x <= 0, ...).
class DomainError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace sns
