#pragma once

#include <stdexcept>
#include <string>

namespace isac {

// Invalid configuration: bad waveform parameters, malformed scenario files,
// dimension mismatches.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Degenerate geometry: target at a BS origin, target behind an array, every
// map pixel excluded.
struct GeometryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical failure: derivative validation failed, singular information
// matrix, undefined channel coefficient.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// I/O failure while reading or writing artifacts.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace isac
