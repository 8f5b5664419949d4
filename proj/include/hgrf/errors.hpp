#pragma once

#include <stdexcept>
#include <string>

namespace hgrf {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (r < 0, nu <= 0, a <= 0, ...).
class DomainError : public Error {
public:
  using Error::Error;
};

/// A covariance block was requested whose derivative order the smoothness does not support.
class SmoothnessError : public Error {
public:
  using Error::Error;
};

/// Numerical inconsistency detected in an assembled object (non-finite entry, bad shape).
class ConsistencyError : public Error {
public:
  using Error::Error;
};

/// Circulant embedding could not be made nonnegative within the padding budget.
class SimulationError : public Error {
public:
  SimulationError(const std::string& what, double most_negative)
      : Error(what), most_negative_(most_negative) {}
  double most_negative_eigenvalue() const noexcept { return most_negative_; }

private:
  double most_negative_;
};

/// Composite likelihood could not be evaluated (non-PSD block, bad neighbourhood).
class LikelihoodError : public Error {
public:
  using Error::Error;
};

/// Every optimizer start failed.
class ConvergenceError : public Error {
public:
  using Error::Error;
};

/// Observation covariance could not be factorized even after ridge regularisation.
class ConditioningError : public Error {
public:
  using Error::Error;
};

/// Input field carries no usable signal (zero variance, zero norm).
class DegenerateError : public Error {
public:
  using Error::Error;
};

/// Malformed text input; the message carries the line number.
class ParseError : public Error {
public:
  using Error::Error;
};

/// A file could not be opened, read or written.
class IoError : public Error {
public:
  using Error::Error;
};

}  // namespace hgrf
