#pragma once

#include <stdexcept>
#include <string>

namespace autoplace {

/// Base of every error thrown by the toolkit. `exit_code()` maps onto the CLI
/// contract: 1 usage, 2 data, 3 numerical.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 2; }
};

class UsageError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 1; }
};

/// Bad input data: I/O failure, schema violation, missing stage artifacts.
class DataError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

class NumericalError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

/// Rank-deficient least-squares system.
class SingularFitError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// RANSAC found no model with enough support.
class DegenerateSceneError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace autoplace
