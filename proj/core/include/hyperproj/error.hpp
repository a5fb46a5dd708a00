#pragma once

#include <stdexcept>
#include <string>

namespace hyperproj {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or missing input: bad files, bad arguments, violated
// preconditions. The CLI maps these to exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

// Numerical failure during a computation (non-finite values, undefined
// similarity). The CLI maps these to exit code 1.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace hyperproj
