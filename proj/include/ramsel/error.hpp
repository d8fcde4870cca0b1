#pragma once

#include <stdexcept>
#include <string>

namespace ramsel {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid user configuration (bad flags, impossible variant, short history).
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Malformed or inconsistent input data.
class DataError : public Error {
public:
  using Error::Error;
};

/// CSV row that could not be parsed.
class ParseError : public DataError {
public:
  ParseError(const std::string& what, std::size_t row)
      : DataError("row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

private:
  std::size_t row_;
};

/// Series declared with a frequency that does not match its dates.
class SchemaError : public DataError {
public:
  using DataError::DataError;
};

/// Invariant violation in a series or panel (duplicates, incomplete quarters).
class ValidationError : public DataError {
public:
  using DataError::DataError;
};

/// A required observation is missing at a given week of a quarter.
class DataGapError : public DataError {
public:
  using DataError::DataError;
};

/// Not enough history for a transform or a regression.
class LengthError : public DataError {
public:
  using DataError::DataError;
};

/// Argument outside the mathematical domain of an operation (e.g. alpha <= 0).
class DomainError : public Error {
public:
  using Error::Error;
};

/// Numerical breakdown: singular design, non-finite criterion.
class NumericalError : public Error {
public:
  using Error::Error;
};

class SingularDesignError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

/// Fewer observations than parameters in a regression.
class InsufficientSampleError : public DataError {
public:
  using DataError::DataError;
};

}  // namespace ramsel
