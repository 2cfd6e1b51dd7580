#pragma once

#include <stdexcept>
#include <string>

namespace dilab {

// Invalid distribution or model parameters (non-positive sigma, zero dims, ...).
struct SpecError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Vector/matrix dimension mismatch between data and model.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Dataset split produced an empty part or fractions do not sum to one.
struct PartitionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Inconsistent run configuration (k_reveal too large, bad scenario, ...).
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Verification protocol violation (unequal subset sizes, single-class input).
struct ProtocolError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Non-finite loss during training; carries the epoch where it happened.
struct TrainingError : std::runtime_error {
    int epoch;
    TrainingError(const std::string& what, int epoch_index)
        : std::runtime_error(what), epoch(epoch_index) {}
};

// A bound's precondition does not hold, so the bound is inapplicable.
struct BoundError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Malformed file content (datasets, models, result tables).
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace dilab
