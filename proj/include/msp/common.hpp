#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace msp {

using Index = std::size_t;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree (vector length, non-square input, layout size).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An argument violates a documented precondition (bad permutation, invalid plan, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A pivot (scalar or block) vanished during a factorization or relaxation.
/// `location()` is the offending row, block or cell index.
class SingularMatrixError : public Error {
 public:
  SingularMatrixError(const std::string& what, Index location)
      : Error(what), location_(location) {}
  [[nodiscard]] Index location() const noexcept { return location_; }

 private:
  Index location_;
};

/// Malformed input file.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace msp
