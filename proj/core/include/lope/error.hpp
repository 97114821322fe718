#pragma once

#include <stdexcept>
#include <string>

namespace lope {

// Caller-side failures: wrong shapes, violated preconditions, bad configs.
// The command-line tool reports these with exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class PreconditionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// A logged action with zero logging propensity breaks importance weighting.
class SupportError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Failures discovered while computing (singular systems, non-finite losses).
// Exit code 2.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lope
