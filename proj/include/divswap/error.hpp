#pragma once

#include <stdexcept>
#include <string>

namespace divswap {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed on-disk data (bad magic, truncated payload, ...).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Well-formed data that breaks a value invariant (NaN/Inf, negative post-ReLU).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Shape disagreement between tensors, grids or images.
class DimensionError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Inputs that are individually valid but do not belong together.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace divswap
