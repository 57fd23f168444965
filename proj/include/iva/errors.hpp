#pragma once

#include <stdexcept>
#include <string>

namespace iva {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape or index mismatch between inputs.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration or parameter value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A matrix is singular or rank-deficient where a full-rank one is required.
class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

// Input outside an operation's mathematical domain (non-finite entries,
// degenerate scores, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// File read/write failure or malformed on-disk data.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace iva
