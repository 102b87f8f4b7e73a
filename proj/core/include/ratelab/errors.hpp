#pragma once

#include <stdexcept>
#include <string>

namespace ratelab {

// Error taxonomy mirrored by the CLI exit codes: schema/data problems exit
// with 2, numeric and training failures with 3, filesystem problems with 4.
// Argument/domain misuse throws std::invalid_argument / std::domain_error,
// which the CLI also maps to 2.

struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when training meets a non-finite loss or gradient; carries the step
// index at which the run was aborted.
struct TrainingError : NumericError {
  TrainingError(const std::string& what, long step_index)
      : NumericError(what + " (step " + std::to_string(step_index) + ")"),
        step(step_index) {}
  long step;
};

}  // namespace ratelab
