#pragma once

#include <stdexcept>
#include <string>

namespace coopt {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad problem definitions, configurations or file contents.
class InputError : public Error {
 public:
  using Error::Error;
};

// A step-size precondition of an integrator is violated.
class StabilityError : public InputError {
 public:
  using InputError::InputError;
};

// Underflow, all-zero tables and similar breakdowns during iteration.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace coopt
