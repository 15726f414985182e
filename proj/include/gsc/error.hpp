#pragma once

#include <stdexcept>
#include <string>

namespace gsc {

/// Base class for every error raised by the library. The CLI maps each
/// subclass onto a fixed process exit status.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad spec, out-of-range coordinate, precondition violated.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A configured resource cap (cells, vertices, solver unknowns) was exceeded.
class ResourceError : public Error {
 public:
  using Error::Error;
};

/// Singular operator, failed factorization, NaN in a chain.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Internal inconsistency, e.g. a corner lookup that should never fail.
class StructuralError : public Error {
 public:
  using Error::Error;
};

}  // namespace gsc
