#pragma once

#include <stdexcept>
#include <string>

namespace wafer {

// Base class for all library errors. The subclasses map onto the process
// exit codes used by the command line tools.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad parameters, missing models or templates, malformed configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Unreadable or inconsistent input data (images, manifests, checkpoints).
class DataError : public Error {
 public:
  using Error::Error;
};

// Numerical failure: dynamics that do not settle, NaN losses.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

enum class ExitCode : int {
  kOk = 0,
  kUnknown = 1,
  kConfig = 2,
  kData = 3,
  kConvergence = 4,
};

}  // namespace wafer
