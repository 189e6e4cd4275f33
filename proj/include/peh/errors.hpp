#pragma once

#include <stdexcept>
#include <string>

namespace peh {

/// Base class for all errors raised by the toolkit.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A design parameter left its admissible range; names the offending field.
class BoundsError : public Error {
public:
  BoundsError(const std::string& field, double value, double lo, double hi)
      : Error("parameter '" + field + "' = " + std::to_string(value) +
              " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]"),
        field_(field) {}
  const std::string& field() const { return field_; }

private:
  std::string field_;
};

/// Discretization cannot represent the required continuity (degree too low).
class ContinuityError : public Error {
public:
  using Error::Error;
};

/// Evaluation point outside the parametric domain.
class DomainError : public Error {
public:
  using Error::Error;
};

/// Mesh does not satisfy a structural precondition (e.g. interface alignment).
class MeshError : public Error {
public:
  using Error::Error;
};

/// Assembled system violates a matrix invariant.
class AssemblyError : public Error {
public:
  using Error::Error;
};

/// Numerical algorithm failed (eigensolver breakdown, step-size collapse, ...).
class NumericError : public Error {
public:
  using Error::Error;
};

/// Malformed input file.
class FormatError : public Error {
public:
  using Error::Error;
};

/// Corrupt data value; carries the offending row when known.
class DataError : public Error {
public:
  DataError(const std::string& what, long row) : Error(what), row_(row) {}
  long row() const { return row_; }

private:
  long row_ = -1;
};

/// Invalid argument to a library call.
class ArgumentError : public Error {
public:
  using Error::Error;
};

/// Invalid configuration detected before any computation.
class ValidationError : public Error {
public:
  using Error::Error;
};

}  // namespace peh
