#pragma once

#include <stdexcept>
#include <string>

namespace bace {

// Base class for all library errors. Subclasses map onto CLI exit codes:
// config/usage -> 1, data/parse -> 2, numeric -> 3.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid configuration value or misuse of an API precondition.
struct ConfigError : Error {
  using Error::Error;
};

// Tensor dimension mismatch.
struct ShapeError : Error {
  using Error::Error;
};

// Malformed input file or inconsistent dataset contents.
struct DataError : Error {
  using Error::Error;
};

// Checkpoint file cannot be read back as a model.
struct CheckpointError : DataError {
  using DataError::DataError;
};

// A computation produced NaN/Inf from finite inputs, or was fed non-finite data.
struct NumericError : Error {
  using Error::Error;
};

}  // namespace bace
