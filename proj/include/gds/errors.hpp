#pragma once

#include <stdexcept>
#include <string>

namespace gds {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: malformed window, inadmissible configuration, window too small, ...
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A structural guarantee failed after a computation (mass not conserved, sign
/// structure broken, ...). The CLI maps this to exit code 1.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

/// An iterative procedure hit its iteration cap. Carries the last residual.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, long iterations, double residual)
      : Error(what), iterations_(iterations), residual_(residual) {}

  long iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }

 private:
  long iterations_;
  double residual_;
};

}  // namespace gds
