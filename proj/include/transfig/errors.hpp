#pragma once

#include <stdexcept>
#include <string>

namespace transfig {

// Invalid configuration or unsupported combination of settings.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor rank/shape disagreement; the message names the offending axis.
class DimensionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataCorruptionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller broke an operation's precondition (e.g. pushing dataset images
// into a generated-image buffer).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class NonFiniteLossError : public std::runtime_error {
 public:
  NonFiniteLossError(std::string term, double value)
      : std::runtime_error("non-finite or divergent loss in term '" + term +
                           "': " + std::to_string(value)),
        term_(std::move(term)),
        value_(value) {}

  const std::string& term() const noexcept { return term_; }
  double value() const noexcept { return value_; }

 private:
  std::string term_;
  double value_;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IncompatibleCheckpointError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

}  // namespace transfig
