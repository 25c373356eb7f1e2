#pragma once

#include <stdexcept>
#include <string>

namespace mixts {

// Root of all library errors. Subclasses map onto CLI exit codes:
// ConfigError/InputError -> 2, NumericalError (and subclasses) -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller passed an argument outside the operation's domain (bad index,
// non-finite observation, wrong dimension).
class InputError : public Error {
 public:
  using Error::Error;
};

// Experiment configuration or an input file is inconsistent.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A floating-point computation failed (factorization, singular solve).
class NumericalError : public Error {
 public:
  using Error::Error;
};

// A closed-form expression was evaluated outside where it is defined,
// e.g. log(d n) <= 0.
class DomainError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Mixture weights with no finite entry, or containing NaN.
class DegenerateWeightsError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace mixts
