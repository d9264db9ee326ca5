#pragma once

#include <stdexcept>
#include <string>

namespace gravamen {

/// Bad user-supplied configuration (unknown key, wrong type, out-of-range value).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (corpus lines, lexicons, prediction files).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure during computation (non-finite values, degenerate statistics).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gravamen
