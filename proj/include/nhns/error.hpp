#pragma once

#include <stdexcept>
#include <string>

namespace nhns {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Grids, shapes or sizes that do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Arguments outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Request for a configuration the implementation does not cover.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Malformed or truncated binary/text containers.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// File system failures.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Iterative methods that fail to converge or produce non-finite values.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace nhns
