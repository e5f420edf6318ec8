#pragma once

#include <stdexcept>
#include <string>

namespace streamtune {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Stream configuration not runnable on the given machine/workload.
class InvalidConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed search grid (empty axis, unsorted, duplicates, non-positive).
class InvalidGridError : public Error {
 public:
  using Error::Error;
};

/// Bad argument value outside of the other, more specific categories.
class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

/// Fewer samples than an estimator needs.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// Training set that cannot produce a usable model (e.g. a single class).
class DegenerateDatasetError : public Error {
 public:
  using Error::Error;
};

/// Iterative solver ran out of its iteration budget.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Regression input with no usable spread (singular normal equations).
class SingularFitError : public Error {
 public:
  using Error::Error;
};

/// Fitted coefficients outside the model's domain of validity.
class InvalidCoefficientsError : public Error {
 public:
  using Error::Error;
};

/// Analytical equation with no root in the feasible region.
class NoSolutionError : public Error {
 public:
  using Error::Error;
};

/// Malformed textual input (JSON/CSV); message carries field context.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Lookup of a key/config/label that is not present.
class LookupError : public Error {
 public:
  using Error::Error;
};

/// Missing or unreadable file, or inconsistent user-supplied data.
class InputError : public Error {
 public:
  using Error::Error;
};

}  // namespace streamtune
