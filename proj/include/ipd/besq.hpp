#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "ipd/error.hpp"
#include "ipd/rng.hpp"

namespace ipd::besq {

inline constexpr std::size_t kMaxGridPoints = 1'000'000;

/// Path sampled on a strictly increasing time grid starting at 0.
struct GridPath {
    std::vector<double> times;
    std::vector<double> values;
    double step = 0.0;

    std::size_t size() const { return times.size(); }
    bool empty() const { return times.empty(); }
    double end_time() const { return times.empty() ? 0.0 : times.back(); }

    /// Linear interpolation; clamps to the end values outside the grid.
    double interpolate(double t) const {
        if (times.empty()) return 0.0;
        if (t <= times.front()) return values.front();
        if (t >= times.back()) return values.back();
        const auto it = std::upper_bound(times.begin(), times.end(), t);
        const std::size_t j = static_cast<std::size_t>(it - times.begin());
        const double t0 = times[j - 1], t1 = times[j];
        const double w = (t - t0) / (t1 - t0);
        return values[j - 1] + w * (values[j] - values[j - 1]);
    }
};

/// A spindle: profile on [0, lifetime] vanishing at the lifetime.
/// Ordinary spindles also vanish at 0; the initial spindle of a clade starts
/// at the block mass instead.
struct Spindle {
    double lifetime = 0.0;
    GridPath profile;

    double initial_mass() const { return profile.values.empty() ? 0.0 : profile.values.front(); }

    /// Width at height z above the jump's base; 0 outside (0, lifetime).
    double value_at(double z) const {
        if (!(z > 0.0) || !(z < lifetime)) return (z == 0.0) ? initial_mass() : 0.0;
        return profile.interpolate(z);
    }

    /// Trapezoid area of the profile.
    double area() const {
        double a = 0.0;
        const auto& t = profile.times;
        const auto& v = profile.values;
        for (std::size_t i = 1; i < t.size(); ++i) a += 0.5 * (v[i] + v[i - 1]) * (t[i] - t[i - 1]);
        return a;
    }
};

/// Exact BESQ(delta) transition Z_t given Z_0 = x: t * noncentral chi^2(delta, x/t).
inline double besq_transition(rng::RngStream& s, double x, double delta, double t) {
    ipd::check::require_nonnegative(x, "besq start");
    ipd::check::require_nonnegative(delta, "besq dimension");
    ipd::check::require_positive(t, "besq time step");
    if (x == 0.0 && delta == 0.0) return 0.0;
    return t * rng::sample_noncentral_chisq(s, delta, x / t);
}

/// Values of a BESQ(delta) bridge from x to 0 over [0, T] at the sorted times in (0, T).
/// Uses the space-time transform b(u) = (1-u)^2 Z(u/(1-u)) of a free path Z.
inline std::vector<double> bridge_to_zero_values(rng::RngStream& s, double x, double T, double delta,
                                                 const std::vector<double>& times) {
    std::vector<double> out;
    out.reserve(times.size());
    double z = x / T;
    double prev_s = 0.0;
    for (double t : times) {
        const double u = t / T;
        if (!(u > 0.0 && u < 1.0)) throw GridError("bridge time outside (0, T)");
        const double sz = u / (1.0 - u);
        if (!(sz > prev_s)) throw GridError("bridge times must be strictly increasing");
        z = besq_transition(s, z, delta, sz - prev_s);
        prev_s = sz;
        out.push_back(T * (1.0 - u) * (1.0 - u) * z);
    }
    return out;
}

/// Absorption time of BESQ_x(-2 alpha): x / (2 G), G ~ Gamma(1 + alpha).
inline double besq_hitting_time_zero(rng::RngStream& s, double x, double alpha) {
    ipd::check::require_positive(x, "besq start");
    ipd::check::require_unit_open(alpha, "alpha");
    return x / (2.0 * rng::sample_gamma(s, 1.0 + alpha, 1.0));
}

namespace detail {

inline std::vector<double> uniform_interior(double T, double dt) {
    std::vector<double> t;
    double h = dt;
    if (T / h > static_cast<double>(kMaxGridPoints)) h = T / static_cast<double>(kMaxGridPoints);
    const auto n = static_cast<std::size_t>(std::ceil(T / h));
    t.reserve(n);
    for (std::size_t k = 1; k < n; ++k) {
        const double tk = static_cast<double>(k) * h;
        if (T - tk <= 1e-12 * T) break;
        t.push_back(tk);
    }
    return t;
}

inline GridPath assemble(double start, const std::vector<double>& interior, const std::vector<double>& vals,
                         double T, double end_value, double step) {
    GridPath p;
    p.step = step;
    p.times.reserve(interior.size() + 2);
    p.values.reserve(interior.size() + 2);
    p.times.push_back(0.0);
    p.values.push_back(start);
    p.times.insert(p.times.end(), interior.begin(), interior.end());
    p.values.insert(p.values.end(), vals.begin(), vals.end());
    p.times.push_back(T);
    p.values.push_back(end_value);
    return p;
}

}  // namespace detail

/// BESQ_x(-2 alpha) absorbed at its first zero, sampled on k*dt plus the absorption time.
/// Given T0 the path is a BESQ(4 + 2 alpha) bridge from x to 0 over [0, T0].
inline GridPath besq_neg_path(rng::RngStream& s, double x, double alpha, double dt) {
    ipd::check::require_positive(x, "besq start");
    ipd::check::require_positive(dt, "dt");
    const double T0 = besq_hitting_time_zero(s, x, alpha);
    const auto interior = detail::uniform_interior(T0, dt);
    const auto vals = bridge_to_zero_values(s, x, T0, 4.0 + 2.0 * alpha, interior);
    return detail::assemble(x, interior, vals, T0, 0.0, dt);
}

/// Same path law as besq_neg_path for a given absorption time, on arbitrary interior times.
inline GridPath besq_neg_path_on(rng::RngStream& s, double x, double alpha, double T0,
                                 const std::vector<double>& interior) {
    const auto vals = bridge_to_zero_values(s, x, T0, 4.0 + 2.0 * alpha, interior);
    return detail::assemble(x, interior, vals, T0, 0.0, 0.0);
}

/// BESQ(4 + 2 alpha) bridge from 0 to 0 of length zeta on the given interior times.
inline Spindle spindle_on(rng::RngStream& s, double zeta, double alpha, const std::vector<double>& interior,
                          double step = 0.0) {
    ipd::check::require_positive(zeta, "spindle lifetime");
    Spindle f;
    f.lifetime = zeta;
    const auto vals = bridge_to_zero_values(s, 0.0, zeta, 4.0 + 2.0 * alpha, interior);
    f.profile = detail::assemble(0.0, interior, vals, zeta, 0.0, step);
    return f;
}

inline Spindle spindle_bridge(rng::RngStream& s, double zeta, double alpha, double dt) {
    ipd::check::require_positive(zeta, "spindle lifetime");
    ipd::check::require_positive(dt, "dt");
    ipd::check::require_unit_open(alpha, "alpha");
    if (dt >= zeta) throw GridError("spindle grid step must be below the lifetime");
    return spindle_on(s, zeta, alpha, detail::uniform_interior(zeta, dt), dt);
}

/// Uniform grid with n_intervals cells merged with extra knots in (0, T).
inline std::vector<double> merged_grid(double T, std::size_t n_intervals, std::vector<double> knots) {
    std::vector<double> t;
    if (n_intervals > 1) t = detail::uniform_interior(T, T / static_cast<double>(n_intervals));
    for (double k : knots)
        if (k > 0.0 && k < T) t.push_back(k);
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    return t;
}

/// Exact BESQ(delta) path on the grid k*dt up to the horizon.
inline GridPath besq_free_path(rng::RngStream& s, double x, double delta, double horizon, double dt) {
    ipd::check::require_nonnegative(x, "besq start");
    ipd::check::require_nonnegative(delta, "besq dimension");
    ipd::check::require_positive(horizon, "horizon");
    ipd::check::require_positive(dt, "dt");
    GridPath p;
    p.step = dt;
    p.times.push_back(0.0);
    p.values.push_back(x);
    double t = 0.0, z = x;
    while (t < horizon * (1.0 - 1e-12)) {
        const double h = std::min(dt, horizon - t);
        z = besq_transition(s, z, delta, h);
        t += h;
        p.times.push_back(t);
        p.values.push_back(z);
    }
    return p;
}

}  // namespace ipd::besq
