#pragma once

#include <stdexcept>
#include <string>

namespace ynn {

// Base for every error raised by the library. The CLI maps ValidationError
// (and its subclasses) to exit code 1 and everything else to exit code 2.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeError : Error {
  using Error::Error;
};

struct ValidationError : Error {
  using Error::Error;
};

struct ParseError : ValidationError {
  using ValidationError::ValidationError;
};

struct VersionError : ParseError {
  using ParseError::ParseError;
};

struct NonFiniteError : ParseError {
  using ParseError::ParseError;
};

struct IoError : Error {
  using Error::Error;
};

// Fixed-point solve did not reach tolerance in either phase.
struct SolverError : Error {
  SolverError(const std::string& what, double residual)
      : Error(what), residual(residual) {}
  double residual;
};

// An iterate became NaN or Inf.
struct DivergenceError : Error {
  using Error::Error;
};

struct SingularError : Error {
  using Error::Error;
};

}  // namespace ynn
