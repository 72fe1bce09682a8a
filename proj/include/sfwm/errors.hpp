#pragma once

#include <stdexcept>
#include <string>

namespace sfwm {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Wavelength or frequency outside a model's validity window.
class RangeError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class NoPhasematchError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// A counting estimator whose denominator is zero.
class UndefinedEstimatorError : public Error {
 public:
  using Error::Error;
};

}  // namespace sfwm
