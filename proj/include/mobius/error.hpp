#pragma once

#include <stdexcept>
#include <string>

namespace mobius {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An operation was called outside its domain (bad ids, bad parameters,
/// violated preconditions).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A numeric procedure failed to reach its tolerance (quadrature, spectral
/// tests beyond tolerance).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file or specification string.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace mobius
