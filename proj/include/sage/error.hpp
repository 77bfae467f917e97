#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace sage {

// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments, malformed files, shape mismatches. The CLI maps these to exit code 2.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Numerical failures. The CLI maps these to exit code 1.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class PositiveDefinitenessViolation : public NumericalError {
 public:
  PositiveDefinitenessViolation(std::vector<double> u, const std::string& what)
      : NumericalError(what), covariates(std::move(u)) {}
  std::vector<double> covariates;
};

class DegenerateDesign : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// The debias constraint set is empty for the requested (alpha, gamma).
class Infeasible : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SingularRestrictedDesign : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SupportTooLarge : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateNoise : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SingularContrastCovariance : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace sage
