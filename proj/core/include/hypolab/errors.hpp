#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hypolab {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A vector or matrix extent does not match the truncation it is used with.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// |t * lambda| exceeded the configured cap while forming exp(-tA).
/// The conjugated flow formulation is not numerically usable for this
/// model and horizon; callers should switch to the direct formulation.
class OverflowCapError : public Error {
public:
    OverflowCapError(const std::string& what, double magnitude, double cap)
        : Error(what), magnitude(magnitude), cap(cap) {}
    double magnitude;
    double cap;
};

/// A simulated trajectory left the representable range.
class BlowUpError : public Error {
public:
    BlowUpError(const std::string& what, std::size_t node, long long path_id = -1)
        : Error(what), node(node), path_id(path_id) {}
    std::size_t node;    // first grid index at which a non-finite value appeared
    long long path_id;   // sample index when raised inside a Monte Carlo run, else -1
};

/// Configuration rejected before any computation started.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace hypolab
