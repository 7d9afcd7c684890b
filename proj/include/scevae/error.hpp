#pragma once

#include <stdexcept>
#include <string>

namespace scevae {

// Exception hierarchy. The CLI maps each family onto a process exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or argument combination (exit code 1).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed, missing or unusable input data, and IO failures (exit code 2).
class DataError : public Error {
 public:
  using Error::Error;
};

// Non-finite losses, non-convergence, degenerate covariances (exit code 3).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace scevae
