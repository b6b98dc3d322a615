#pragma once

#include <stdexcept>
#include <string>

namespace arpred {

/// A model or call parameter lies outside its domain (|rho| >= 1, alpha not in (0,1), ...).
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The estimator denominator vanished (all-zero window).
class DegenerateSeriesError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// No closed-form conditional bias is available for the requested estimator.
class UnsupportedBiasError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Numerical failure: solver non-convergence, density underflow in a division.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or invalid run configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace arpred
