#pragma once

#include <stdexcept>
#include <string>

namespace prescribe {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: invalid weights, infeasible parameters, malformed configs.
/// The CLI maps these to exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure could not deliver its contract (exit code 3).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Some waist reached circumference 1, or a patch fell below its area floor.
class InfeasibleEpsilon : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class InfeasibleArea : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Mesh resolution too coarse for the requested geometry.
class RefinementRequired : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DegenerateSpectrum : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ConvergenceFailure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace prescribe
