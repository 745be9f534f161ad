#pragma once

#include <stdexcept>
#include <string>

namespace tribogen {

// Rejection-resampling budget exhausted while drawing a truncated population.
struct SamplingExhaustedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Fewer than two distinct normal-force knots: no law can be interpolated.
struct DegenerateLawError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite intermediates or a quadrature that failed to converge.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Unreadable, unwritable or malformed files (shards, manifests, scalers,
// checkpoints, law CSVs).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace tribogen
