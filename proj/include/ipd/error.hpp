#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace ipd {

// Invalid distribution or model parameter (NaN, infinite, out of domain).
struct ParameterError : std::domain_error {
    using std::domain_error::domain_error;
};

// Grid spacing incompatible with the object being sampled.
struct GridError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Numerical resolution insufficient (singular integral, bandwidth, threshold).
struct ResolutionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Simulation horizon exhausted before the requested event; caller may resample.
struct HorizonExhausted : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace check {

inline void require(bool ok, const std::string& what) {
    if (!ok) throw ParameterError(what);
}

inline void require_finite(double v, const char* name) {
    if (!std::isfinite(v)) throw ParameterError(std::string(name) + " must be finite");
}

inline void require_positive(double v, const char* name) {
    require_finite(v, name);
    if (!(v > 0.0)) throw ParameterError(std::string(name) + " must be positive");
}

inline void require_nonnegative(double v, const char* name) {
    require_finite(v, name);
    if (!(v >= 0.0)) throw ParameterError(std::string(name) + " must be nonnegative");
}

inline void require_unit_open(double v, const char* name) {
    require_finite(v, name);
    if (!(v > 0.0 && v < 1.0)) throw ParameterError(std::string(name) + " must lie in (0,1)");
}

}  // namespace check
}  // namespace ipd
