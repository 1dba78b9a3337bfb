#pragma once

#include <stdexcept>
#include <string>

namespace textmatch {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not satisfy a primitive's signature.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A value falls outside the mathematical domain of an operation (log of a
/// non-positive number and the like).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid hyper-parameters, unit parameters or run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed input files. The message names the file line when known.
class IngestionError : public Error {
 public:
  using Error::Error;
};

/// A stateful unit was used before being fitted.
class NotFittedError : public Error {
 public:
  using Error::Error;
};

/// Persisted artifacts are missing or inconsistent.
class LoadError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss or gradient.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace textmatch
