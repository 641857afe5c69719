#pragma once

#include "ipd/error.hpp"

namespace ipd {

/// Bessel dimension d and stable parameter alpha, tied by alpha = 1 - d.
/// Only alpha is stored.
class GlobalParams {
public:
    static GlobalParams from_alpha(double alpha) {
        ipd::check::require_unit_open(alpha, "alpha");
        return GlobalParams(alpha);
    }
    static GlobalParams from_d(double d) {
        ipd::check::require_unit_open(d, "d");
        return GlobalParams(1.0 - d);
    }

    double alpha() const { return alpha_; }
    double d() const { return 1.0 - alpha_; }

private:
    explicit GlobalParams(double a) : alpha_(a) {}
    double alpha_;
};

}  // namespace ipd
