#pragma once

#include <stdexcept>
#include <string>

namespace bellsim {

/// Wavelength or parameter outside the domain where a model is valid.
class RangeError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// Malformed or inconsistent configuration. CLI exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad or insufficient input data. CLI exit code 3.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Requested preparation is impossible for the given source. CLI exit code 4.
class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Frequency grid does not contain the amplitude's support, or is too
/// coarse for the delays applied to it.
class TruncationError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// Two amplitudes defined on different grids were combined.
class GridMismatchError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace bellsim
