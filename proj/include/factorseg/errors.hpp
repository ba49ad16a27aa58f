#pragma once

#include <stdexcept>
#include <string>

namespace factorseg {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed input file (ragged rows, empty file, ...).
struct FormatError : Error {
    using Error::Error;
};

/// A cell failed to parse as a finite number; message names (row, col).
struct ParseError : Error {
    using Error::Error;
};

/// Dimensions outside the supported envelope.
struct DimensionError : Error {
    using Error::Error;
};

/// Time interval outside [1, T] or otherwise degenerate.
struct RangeError : Error {
    using Error::Error;
};

/// Invalid matrix input (e.g. not symmetric).
struct InputError : Error {
    using Error::Error;
};

/// Wavelet scale outside the supported range.
struct ScaleError : Error {
    using Error::Error;
};

/// Series too short for the requested filter.
struct LengthError : Error {
    using Error::Error;
};

/// Input with no variation where variation is required.
struct DegenerateInputError : Error {
    using Error::Error;
};

/// Invalid configuration value.
struct ConfigError : Error {
    using Error::Error;
};

/// Memory-budget style limits exceeded.
struct ResourceError : Error {
    using Error::Error;
};

}  // namespace factorseg
