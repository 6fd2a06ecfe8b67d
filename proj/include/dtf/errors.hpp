#pragma once

#include <stdexcept>
#include <string>

namespace dtf {

// Base for every error raised by the library. The C API maps each subclass
// onto a stable status code (see dtf.h).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor or model shapes that do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Invalid hyperparameters or run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or insufficient input data, unreadable/unwritable files.
class DataError : public Error {
 public:
  using Error::Error;
};

// A forward or backward pass produced a non-finite value.
class NumericError : public Error {
 public:
  using Error::Error;
};

// API misuse, e.g. backward() on a non-scalar.
class ContractError : public Error {
 public:
  using Error::Error;
};

}  // namespace dtf
