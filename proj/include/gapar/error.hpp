#pragma once

#include <stdexcept>
#include <string>

namespace gapar {

// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on the arguments was violated (bad order, unstable filter,
// malformed file, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// A computation that should succeed for valid input broke down numerically.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

// Closed form not defined at this point (zero or repeated roots); callers
// fall back to the covariance form.
class DegenerateCase : public Error {
 public:
  using Error::Error;
};

class UnsupportedOrder : public Error {
 public:
  using Error::Error;
};

}  // namespace gapar
