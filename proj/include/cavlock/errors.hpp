#pragma once

#include <stdexcept>
#include <string>

namespace cavlock {

/// Base of all errors raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input (dimensions, parameters, files).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed (singular solve, non-convergence, ...).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A post-condition check on a result did not hold (e.g. unstable loop).
class VerificationError : public Error {
 public:
  using Error::Error;
};

}  // namespace cavlock
