#pragma once

#include <stdexcept>
#include <string>

namespace mobfair {

// Base of every error raised by the library. The CLI maps the concrete
// subclasses to process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A value violates the documented precondition of an operation.
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

// Malformed or missing file input (CSV, GeoJSON, JSON).
class InputError : public Error {
 public:
  using Error::Error;
};

// Contradictory or incomplete run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A shrinking buffer removed the whole polygon.
class EmptyGeometryError : public Error {
 public:
  using Error::Error;
};

// The candidate pool holds no testable cell-subset.
class NoCandidatesError : public Error {
 public:
  using Error::Error;
};

// An artifact from an earlier pipeline stage is absent.
class MissingStageError : public Error {
 public:
  using Error::Error;
};

}  // namespace mobfair
