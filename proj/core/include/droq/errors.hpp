#pragma once

#include <stdexcept>
#include <string>

namespace droq {

// Shape mismatches, invalid hyperparameters, unknown config keys.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Non-finite values entering or leaving a computation.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// API misuse such as a stale backward tape or sampling from an empty buffer.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Arguments outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace droq
