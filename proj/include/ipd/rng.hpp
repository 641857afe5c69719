#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "ipd/error.hpp"

namespace ipd::rng {

inline std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = a ^ (b * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL);
    splitmix64(s);
    return splitmix64(s);
}

/// xoshiro256** keyed by (master_seed, stream_index).
/// Streams with different indices are seeded through splitmix64 of the pair,
/// so replicate k always sees the same sequence regardless of scheduling.
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_index)
        : master_(master_seed), index_(stream_index) {
        std::uint64_t s = mix64(master_seed, stream_index);
        for (auto& w : state_) w = splitmix64(s);
    }

    std::uint64_t master_seed() const { return master_; }
    std::uint64_t stream_index() const { return index_; }

    /// Independent child stream; deterministic in (this stream's key, k).
    RngStream split(std::uint64_t k) const {
        return RngStream(mix64(master_, index_ + 0x632be59bd9b4e019ULL), k);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform on the open interval (0,1).
    double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    double exponential() { return -std::log(uniform()); }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        has_spare_ = true;
        return u * m;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t master_;
    std::uint64_t index_;
    std::array<std::uint64_t, 4> state_{};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

namespace detail {

// Marsaglia-Tsang for shape >= 1, unit rate.
inline double gamma_unit_large(RngStream& s, double shape) {
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = s.normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = s.uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

}  // namespace detail

inline double sample_gamma(RngStream& s, double shape, double rate) {
    ipd::check::require_positive(shape, "gamma shape");
    ipd::check::require_positive(rate, "gamma rate");
    if (shape >= 1.0) return detail::gamma_unit_large(s, shape) / rate;
    // Gamma(a) = Gamma(a+1) * U^{1/a}
    const double g = detail::gamma_unit_large(s, shape + 1.0);
    return g * std::exp(std::log(s.uniform()) / shape) / rate;
}

inline std::uint64_t sample_poisson(RngStream& s, double mean) {
    ipd::check::require_nonnegative(mean, "poisson mean");
    if (mean == 0.0) return 0;
    if (mean < 10.0) {
        // inversion by sequential search
        double p = std::exp(-mean);
        double f = p;
        const double u = s.uniform();
        std::uint64_t k = 0;
        while (u > f && k < 1000) {
            ++k;
            p *= mean / static_cast<double>(k);
            f += p;
        }
        return k;
    }
    // PTRS transformed rejection (Hormann 1993)
    const double slam = std::sqrt(mean);
    const double loglam = std::log(mean);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
        const double u = s.uniform() - 0.5;
        const double v = s.uniform();
        const double us = 0.5 - std::fabs(u);
        const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
        if (k < 0.0 || (us < 0.013 && v > us)) continue;
        if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
            -mean + k * loglam - std::lgamma(k + 1.0))
            return static_cast<std::uint64_t>(k);
    }
}

inline double sample_noncentral_chisq(RngStream& s, double dof, double noncentrality) {
    ipd::check::require_nonnegative(dof, "chi-square dof");
    ipd::check::require_nonnegative(noncentrality, "chi-square noncentrality");
    const auto k = sample_poisson(s, 0.5 * noncentrality);
    const double shape = 0.5 * dof + static_cast<double>(k);
    if (shape == 0.0) return 0.0;
    return sample_gamma(s, shape, 0.5);
}

inline double sample_beta(RngStream& s, double a, double b) {
    ipd::check::require_positive(a, "beta a");
    ipd::check::require_positive(b, "beta b");
    for (;;) {
        const double x = sample_gamma(s, a, 1.0);
        const double y = sample_gamma(s, b, 1.0);
        const double r = x / (x + y);
        if (r > 0.0 && r < 1.0) return r;
    }
}

/// Pareto with scale xm and tail index k: P(Z > z) = (xm/z)^k.
inline double sample_pareto(RngStream& s, double xm, double k) {
    return xm * std::exp(-std::log(s.uniform()) / k);
}

/// Positive stable with E exp(-q S) = exp(-q^beta), 0 < beta < 1 (Kanter).
inline double sample_positive_stable(RngStream& s, double beta) {
    ipd::check::require_unit_open(beta, "stable index");
    const double u = std::numbers::pi * s.uniform();
    const double e = s.exponential();
    const double a = std::sin(beta * u) / std::pow(std::sin(u), 1.0 / beta);
    const double b = std::pow(std::sin((1.0 - beta) * u) / e, (1.0 - beta) / beta);
    return a * b;
}

}  // namespace ipd::rng
