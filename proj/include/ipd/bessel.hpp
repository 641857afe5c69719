#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "ipd/besq.hpp"
#include "ipd/error.hpp"
#include "ipd/levy.hpp"
#include "ipd/partition.hpp"
#include "ipd/rng.hpp"
#include "ipd/scaffolding.hpp"

// Bessel side: excursions of R ~ BES_0(d) with the compensated process H, and the
// time changes between spindles and excursions.
namespace ipd::bessel {

/// Excursion path on a grid: R values e, real times t from 0, and H increments z.
struct Excursion {
    std::vector<double> t, e, z;

    double lifetime() const { return t.empty() ? 0.0 : t.back(); }
    double height() const { return z.empty() ? 0.0 : z.back(); }
    bool empty() const { return t.size() < 2; }
    double max() const { return e.empty() ? 0.0 : *std::max_element(e.begin(), e.end()); }
};

/// e(t) = f(Z^{-1}(t)) / 2 with Z(z) = int_0^z f; the H-increment at time t is the spindle height z.
inline Excursion excursion_from_spindle(const besq::Spindle& f) {
    Excursion ex;
    const auto& zs = f.profile.times;
    const auto& fs = f.profile.values;
    if (zs.size() < 2) return ex;
    double area = 0.0;
    for (std::size_t i = 1; i < zs.size(); ++i) area += 0.5 * (fs[i] + fs[i - 1]) * (zs[i] - zs[i - 1]);
    if (!(area > 0.0)) return ex;
    ex.t.reserve(zs.size());
    ex.e.reserve(zs.size());
    ex.z = zs;
    double t = 0.0;
    for (std::size_t i = 0; i < zs.size(); ++i) {
        if (i > 0) t += 0.5 * (fs[i] + fs[i - 1]) * (zs[i] - zs[i - 1]);
        ex.t.push_back(t);
        ex.e.push_back(0.5 * fs[i]);
    }
    return ex;
}

namespace detail {

// int du / e over [t0, t1] with e linear between e0 > 0 and e1 > 0
inline double log_mean_integral(double dt, double e0, double e1) {
    const double r = e1 / e0;
    if (std::fabs(r - 1.0) < 1e-8) return dt * 2.0 / (e0 + e1);
    return dt * std::log(r) / (e1 - e0);
}

// int_0^dt du / e with e(u) ~ e_dt (u/dt)^p, exponent fitted from the next grid point
inline double endpoint_integral(double dt, double e_dt, double dt2, double e_dt2) {
    double p = 0.5;
    if (dt2 > dt && e_dt2 > 0.0 && e_dt > 0.0) p = std::log(e_dt2 / e_dt) / std::log(dt2 / dt);
    p = std::clamp(std::isfinite(p) ? p : 0.5, 0.1, 0.9);
    return dt / (e_dt * (1.0 - p));
}

}  // namespace detail

/// Inverse of excursion_from_spindle: f(z) = 2 e(t) at z = (1/2) int_0^t du / e.
/// Zero endpoints use a power-law fit on the adjacent grid cells.
inline besq::Spindle spindle_from_excursion(const std::vector<double>& t, const std::vector<double>& e) {
    if (t.size() != e.size() || t.size() < 3) throw GridError("excursion grid too short");
    const std::size_t n = t.size();
    besq::Spindle f;
    f.profile.times.assign(n, 0.0);
    f.profile.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) f.profile.values[i] = 2.0 * e[i];
    // cumulative half-integral of du / e
    double z = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
        const double dt = t[i] - t[i - 1];
        if (!(dt > 0.0)) throw GridError("excursion times must increase");
        double piece;
        if (e[i - 1] > 0.0 && e[i] > 0.0) {
            piece = detail::log_mean_integral(dt, e[i - 1], e[i]);
        } else if (e[i - 1] <= 0.0 && e[i] > 0.0) {
            const double dt2 = (i + 1 < n) ? t[i + 1] - t[i - 1] : 0.0;
            piece = detail::endpoint_integral(dt, e[i], dt2, i + 1 < n ? e[i + 1] : 0.0);
        } else if (e[i - 1] > 0.0 && e[i] <= 0.0) {
            const double dt2 = (i >= 2) ? t[i] - t[i - 2] : 0.0;
            piece = detail::endpoint_integral(dt, e[i - 1], dt2, i >= 2 ? e[i - 2] : 0.0);
        } else {
            throw ResolutionError("excursion vanishes on an interior grid cell");
        }
        if (!std::isfinite(piece)) throw ResolutionError("singular integral diverged");
        z += 0.5 * piece;
        f.profile.times[i] = z;
    }
    f.lifetime = z;
    f.profile.step = n > 1 ? z / static_cast<double>(n - 1) : 0.0;
    return f;
}

inline besq::Spindle spindle_from_excursion(const Excursion& ex) { return spindle_from_excursion(ex.t, ex.e); }

/// Joint (R, H) path on a grid, with the excursion intervals of R.
struct BesselPath {
    struct Interval {
        double left = 0.0, right = 0.0;  // real times
        std::size_t begin = 0, end = 0;  // grid index range [begin, end)
    };
    double d = 0.5;
    std::vector<double> t, R, H;
    std::vector<Interval> excursions;

    double end_time() const { return t.empty() ? 0.0 : t.back(); }
};

/// (R, H) from a marked scaffolding: excursions e_i placed at tau(s) = sum_{s_i <= s} zeta(e_i),
/// H = X(s_i-) + z inside the i-th excursion. Between excursions no real time passes.
inline BesselPath build_R_H_from_scaffolding(const scaffolding::MarkedScaffolding& X) {
    BesselPath p;
    p.d = 1.0 - X.alpha;
    double tau = 0.0;
    p.t.push_back(0.0);
    p.R.push_back(0.0);
    p.H.push_back(X.initial_level);
    for (const auto& j : X.jumps) {
        const auto ex = excursion_from_spindle(j.spindle);
        if (ex.empty()) continue;
        BesselPath::Interval iv;
        iv.left = tau;
        iv.begin = p.t.size();
        for (std::size_t k = 0; k < ex.t.size(); ++k) {
            p.t.push_back(tau + ex.t[k]);
            p.R.push_back(ex.e[k]);
            p.H.push_back(j.pre_level + ex.z[k]);
        }
        tau += ex.lifetime();
        iv.right = tau;
        iv.end = p.t.size();
        p.excursions.push_back(iv);
    }
    return p;
}

struct LevelLocalTime {
    double level = 0.0;
    std::vector<double> times;   // jump times of lambda^y
    std::vector<double> jumps;   // 2 R(t) at H(t) = y
    std::vector<double> values;  // cumulative lambda^y after each jump

    double total() const { return values.empty() ? 0.0 : values.back(); }
};

/// lambda^y: each excursion whose H-range straddles y contributes 2 R at the crossing,
/// interpolated linearly in H (H is increasing within an excursion).
inline LevelLocalTime level_local_time(const BesselPath& p, double y, double T = std::numeric_limits<double>::infinity()) {
    LevelLocalTime L;
    L.level = y;
    double acc = 0.0;
    for (const auto& iv : p.excursions) {
        if (iv.left > T) break;
        const double h0 = p.H[iv.begin], h1 = p.H[iv.end - 1];
        const bool base = (h0 == y && p.R[iv.begin] > 0.0);
        if (!(base || (h0 < y && y < h1))) continue;
        double r = p.R[iv.begin];
        double at = iv.left;
        if (!base) {
            std::size_t k = iv.begin + 1;
            while (k < iv.end && p.H[k] <= y) ++k;
            const double w = (y - p.H[k - 1]) / (p.H[k] - p.H[k - 1]);
            r = p.R[k - 1] + w * (p.R[k] - p.R[k - 1]);
            at = p.t[k - 1] + w * (p.t[k] - p.t[k - 1]);
        }
        if (at > T || !(r > 0.0)) continue;
        acc += 2.0 * r;
        L.times.push_back(at);
        L.jumps.push_back(2.0 * r);
        L.values.push_back(acc);
    }
    return L;
}

/// Interval partition of the jumps of lambda^y in time order.
inline skewer::IntervalPartition beta_from_bessel(const BesselPath& p, double y,
                                                  double T = std::numeric_limits<double>::infinity()) {
    return skewer::IntervalPartition::from_blocks(level_local_time(p, y, T).jumps);
}

/// H estimated from R alone: H(t) = (1/2) int a^{d-2} (L^a(t) - L^0(t)) da with L^a from
/// log-binned occupation times (occupation density a^{d-1} L^a). L^0 is read off the lowest bin.
/// `bins_per_decade` sets the bandwidth; query times must be increasing.
inline std::vector<double> compute_H_direct(const std::vector<double>& t, const std::vector<double>& R, double d,
                                            const std::vector<double>& query, double a_min, double a_max,
                                            int bins_per_decade = 20, bool subtract_zero_local_time = true) {
    if (t.size() != R.size() || t.size() < 2) throw GridError("path grid too short");
    ipd::check::require_positive(a_min, "lowest occupation level");
    if (!(a_max > a_min)) throw ParameterError("occupation range is empty");
    if (bins_per_decade < 1) throw ResolutionError("bandwidth must give at least one bin per decade");
    double min_dt = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < t.size(); ++i) min_dt = std::min(min_dt, t[i] - t[i - 1]);
    if (a_min * a_min < min_dt) throw ResolutionError("lowest occupation level below the grid resolution");
    const double width = std::log(10.0) / bins_per_decade;
    const auto nb = static_cast<std::size_t>(std::ceil(std::log(a_max / a_min) / width));
    std::vector<double> occ(nb + 1, 0.0), lo(nb + 1), hi(nb + 1), mid(nb + 1);
    lo[0] = 0.0;  // bin 0 collects everything below a_min
    hi[0] = a_min;
    mid[0] = 0.5 * a_min;
    for (std::size_t j = 1; j <= nb; ++j) {
        lo[j] = a_min * std::exp(width * static_cast<double>(j - 1));
        hi[j] = a_min * std::exp(width * static_cast<double>(j));
        mid[j] = std::sqrt(lo[j] * hi[j]);
    }
    auto estimate = [&]() {
        const double L0 = occ[0] * d / std::pow(a_min, d);  // occupation of [0, a_min) = L^0 a_min^d / d
        double h = 0.0;
        for (std::size_t j = 1; j <= nb; ++j) {
            const double da = hi[j] - lo[j];
            const double La = occ[j] / (da * std::pow(mid[j], d - 1.0));
            h += std::pow(mid[j], d - 2.0) * (La - (subtract_zero_local_time ? L0 : 0.0)) * da;
        }
        // levels above a_max are never visited: L^a = 0 there
        if (subtract_zero_local_time) h -= L0 * std::pow(a_max, d - 1.0) / (1.0 - d);
        return 0.5 * h;
    };
    std::vector<double> out;
    out.reserve(query.size());
    std::size_t q = 0, i = 1;
    while (q < query.size() && query[q] <= t.front()) {
        out.push_back(0.0);
        ++q;
    }
    for (; i < t.size() && q < query.size(); ++i) {
        const double t0 = t[i - 1];
        const double t1 = std::min(t[i], query[q]);
        const double r = 0.5 * (R[i - 1] + R[i]);
        if (r < a_max) {
            std::size_t j = 0;
            if (r >= a_min) j = std::min(nb, 1 + static_cast<std::size_t>(std::floor(std::log(r / a_min) / width)));
            occ[j] += t1 - t0;
        }
        while (q < query.size() && query[q] <= t[i]) {
            out.push_back(estimate());
            ++q;
        }
    }
    while (q < query.size()) {
        out.push_back(estimate());
        ++q;
    }
    return out;
}

/// (1/2) int du / R over [t_0, t] by the log-mean rule on each cell, endpoint zeros by power-law fit.
inline std::vector<double> half_integral_inverse(const std::vector<double>& t, const std::vector<double>& R) {
    std::vector<double> out(t.size(), 0.0);
    for (std::size_t i = 1; i < t.size(); ++i) {
        const double dt = t[i] - t[i - 1];
        double piece = 0.0;
        if (R[i - 1] > 0.0 && R[i] > 0.0) {
            piece = detail::log_mean_integral(dt, R[i - 1], R[i]);
        } else if (R[i] > 0.0) {
            piece = detail::endpoint_integral(dt, R[i], i + 1 < t.size() ? t[i + 1] - t[i - 1] : 0.0,
                                              i + 1 < t.size() ? R[i + 1] : 0.0);
        } else if (R[i - 1] > 0.0) {
            piece = detail::endpoint_integral(dt, R[i - 1], i >= 2 ? t[i] - t[i - 2] : 0.0, i >= 2 ? R[i - 2] : 0.0);
        }
        out[i] = out[i - 1] + 0.5 * piece;
    }
    return out;
}

/// Crossing values x = R at H = 0 of (R, H)-excursions from (0, 0), per unit of the
/// (0,0) local-time clock: intensity ((1-d)/Gamma(d)) x^{d-2} dx on x >= xmin.
inline std::vector<double> sample_crossing_values(rng::RngStream& s, double u, double d, double xmin) {
    ipd::check::require_nonnegative(u, "local time");
    ipd::check::require_unit_open(d, "dimension");
    ipd::check::require_positive(xmin, "crossing truncation");
    const auto n = rng::sample_poisson(s, u * scaffolding::crossing_value_rate(xmin, d));
    std::vector<double> xs(n);
    for (auto& x : xs) x = scaffolding::sample_crossing_value(s, xmin, d);
    return xs;
}

/// The parts of (R, H)-excursions from (0,0) above H = 0 up to tau^{(0,0)}(u), as a stitched
/// scaffolding: after crossing H = 0 with R = x, the spindle continues as BESQ_{2x}(-2 alpha)
/// and H follows a clade from block 2x.
inline scaffolding::MarkedScaffolding sample_upper_parts(rng::RngStream& s, double u, double d, double eps,
                                                          double xmin, const scaffolding::SpindleGrid& grid,
                                                          double cap = scaffolding::kNoCap) {
    std::vector<scaffolding::Clade> clades;
    for (double x : sample_crossing_values(s, u, d, xmin))
        clades.push_back(scaffolding::clade_from_block(s, 2.0 * x, 1.0 - d, eps, grid, cap));
    if (clades.empty()) {
        scaffolding::MarkedScaffolding X;
        X.alpha = 1.0 - d;
        X.eps = eps;
        X.cap = cap;
        X.drift_rate = -scaffolding::compensating_drift(eps, 1.0 - d);
        return X;
    }
    return scaffolding::stitch(std::move(clades));
}

}  // namespace ipd::bessel
