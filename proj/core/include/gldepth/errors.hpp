#pragma once

#include <stdexcept>
#include <string>

namespace gldepth {

// Error taxonomy shared by all modules. The CLI maps these to nonzero exit
// codes and a machine-readable error JSON.

// Invalid configuration: bad shapes, impossible parameter ranges, missing files.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// API misuse: non-scalar loss passed to backward, empty label set, etc.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed file contents (PFM, checkpoint, manifest).
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Geometrically degenerate input: near-zero translation, rank-deficient
// triangulation system, near-zero quaternion.
struct DegenerateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Metric preconditions violated (non-positive depth under the mask).
struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite values where finite ones are required (NaN loss or gradient).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace gldepth
