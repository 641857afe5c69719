#pragma once

#include <cmath>

#include "ipd/error.hpp"
#include "ipd/rng.hpp"

// Spectrally positive stable(1+alpha) process with Laplace exponent
// psi(c) = c^{1+alpha} / (2^alpha Gamma(1+alpha)).
namespace ipd::scaffolding {

inline double levy_constant(double alpha) {
    return alpha * (1.0 + alpha) / (std::pow(2.0, alpha) * std::tgamma(1.0 + alpha) * std::tgamma(1.0 - alpha));
}

/// Levy density Pi(z) = C z^{-2-alpha}.
inline double levy_jump_rate(double z, double alpha) {
    ipd::check::require_positive(z, "jump size");
    ipd::check::require_unit_open(alpha, "alpha");
    return levy_constant(alpha) * std::pow(z, -2.0 - alpha);
}

/// Pi((y, inf)).
inline double levy_tail(double y, double alpha) {
    ipd::check::require_positive(y, "tail threshold");
    return levy_constant(alpha) / (1.0 + alpha) * std::pow(y, -1.0 - alpha);
}

inline double laplace_exponent(double c, double alpha) {
    return std::pow(c, 1.0 + alpha) / (std::pow(2.0, alpha) * std::tgamma(1.0 + alpha));
}

/// W with Laplace transform 1/psi.
inline double scale_function(double x, double alpha) {
    return x > 0.0 ? std::pow(2.0 * x, alpha) : 0.0;
}

/// Downward drift speed compensating the jumps of size >= eps.
inline double compensating_drift(double eps, double alpha) {
    return levy_constant(alpha) * std::pow(eps, -alpha) / alpha;
}

/// Mean spindle mass per unit local time carried by jumps below eps.
inline double missing_mass_rate(double eps, double alpha) {
    return levy_constant(alpha) * (4.0 + 2.0 * alpha) * std::pow(eps, 1.0 - alpha) / (6.0 * (1.0 - alpha));
}

/// Rate of bi-clades whose supremum exceeds y, per unit local time at 0.
inline double biclade_sup_rate(double y, double alpha) {
    return std::pow(2.0, -alpha) * std::pow(y, -alpha);
}

inline double sample_jump_above(rng::RngStream& s, double eps, double alpha) {
    return rng::sample_pareto(s, eps, 1.0 + alpha);
}

/// Time for X to first reach x0 - u: u^{1+alpha} 2^alpha Gamma(1+alpha) S, S positive stable(1/(1+alpha)).
inline double sample_first_passage_time_down(rng::RngStream& s, double u, double alpha) {
    if (u <= 0.0) return 0.0;
    const double kappa = std::pow(2.0, alpha) * std::tgamma(1.0 + alpha);
    return std::pow(u, 1.0 + alpha) * kappa * rng::sample_positive_stable(s, 1.0 / (1.0 + alpha));
}

struct Overshoot {
    double undershoot;  // target - X(T-)
    double jump;        // jump size; X(T) = target - undershoot + jump
};

/// Exact law of the jump by which X started at target - distance first exceeds target.
/// Pre-jump distance r has density prop. to [W(distance) - W(distance - r)] Pi((r, inf)).
inline Overshoot sample_first_passage_up(rng::RngStream& s, double distance, double alpha) {
    ipd::check::require_positive(distance, "distance to target");
    const double w_small = 1.0 / (1.0 - alpha);
    const double w_large = 1.0 / alpha;
    double rho;
    for (;;) {
        if (s.uniform() * (w_small + w_large) < w_small) {
            rho = std::pow(s.uniform(), 1.0 / (1.0 - alpha));
            const double accept = (1.0 - std::pow(1.0 - rho, alpha)) / rho;
            if (s.uniform() < accept) break;
        } else {
            rho = std::pow(s.uniform(), -1.0 / alpha);
            break;
        }
    }
    const double r = distance * rho;
    return {r, rng::sample_pareto(s, r, 1.0 + alpha)};
}

/// Central jumps of X-excursions from a level: intensity du Pi(dz) on 0 < u < z,
/// per unit of local time, restricted to z >= eps.
struct CentralJump {
    double undershoot;  // u: depth of the pre-jump level below the base level
    double jump;        // z: spindle lifetime
};

inline double central_jump_rate(double eps, double alpha) {
    return levy_constant(alpha) * std::pow(eps, -alpha) / alpha;
}

inline CentralJump sample_central_jump(rng::RngStream& s, double eps, double alpha) {
    const double z = rng::sample_pareto(s, eps, alpha);
    return {z * s.uniform(), z};
}

/// Crossing values of R at H = 0 for (R,H)-excursions: intensity ((1-d)/Gamma(d)) x^{d-2}, x >= xmin.
inline double crossing_value_rate(double xmin, double d) {
    return std::pow(xmin, d - 1.0) / std::tgamma(d);
}

inline double sample_crossing_value(rng::RngStream& s, double xmin, double d) {
    return rng::sample_pareto(s, xmin, 1.0 - d);
}

}  // namespace ipd::scaffolding
