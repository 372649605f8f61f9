#pragma once

#include <stdexcept>
#include <string>

namespace qcorr {

// Shapes of two operands (or an operand and a layout) do not agree.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// An input violates a documented invariant (non-orthonormal basis,
// non-unitary rotation, negative occupation, ...).
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// The thermal tail beyond the Fock cutoff exceeds the allowed deficit.
struct TruncationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A numerical procedure was asked to run with settings that cannot meet its
// accuracy contract (e.g. too coarse a time step).
struct AccuracyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An identity was invoked outside the regime in which it holds.
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed configuration or input file.
struct ConfigError : ValidationError {
  using ValidationError::ValidationError;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace qcorr
