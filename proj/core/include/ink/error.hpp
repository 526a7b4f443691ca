#pragma once

#include <stdexcept>
#include <string>

namespace ink {

// Error taxonomy mirrors the CLI exit codes: user/input problems exit with 2,
// gate failures with 3, anything else with 1.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad input data, malformed files, invalid configuration or flags.
struct UserError : Error {
  using Error::Error;
};

// An evaluation-model accuracy gate was not met; results would be unreliable.
struct GateError : Error {
  using Error::Error;
};

struct ShapeError : Error {
  using Error::Error;
};

struct NumericError : Error {
  using Error::Error;
};

struct TrainingDiverged : Error {
  using Error::Error;
};

}  // namespace ink
