#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "ipd/besq.hpp"
#include "ipd/levy.hpp"
#include "ipd/partition.hpp"
#include "ipd/rng.hpp"
#include "ipd/scaffolding.hpp"

// Streamed skewer runs: only jumps straddling requested levels are kept, and the
// scaffolding above the top level is excised.
namespace ipd::scaffolding {

struct RunOptions {
    double eps = 1e-4;
    // Add rate * occupation local time of sub-eps spindles to total_mass. Off by default:
    // the truncated scaffolding also inflates the mass of larger spindles, so this overcorrects.
    bool with_deficit = false;
};

/// Per-level accumulation of spindle widths and down-crossing counts.
class LevelRecorder {
public:
    LevelRecorder(std::vector<double> levels, double alpha) : alpha_(alpha), levels_(std::move(levels)) {
        for (double y : levels_) ipd::check::require_finite(y, "level");
        order_.resize(levels_.size());
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        std::sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) { return levels_[a] < levels_[b]; });
        sorted_.reserve(levels_.size());
        for (auto i : order_) sorted_.push_back(levels_[i]);
        parts_.resize(levels_.size());
        crossings_.assign(levels_.size(), 0);
    }

    double top() const { return sorted_.empty() ? -std::numeric_limits<double>::infinity() : sorted_.back(); }
    const std::vector<double>& levels() const { return levels_; }

    /// Record a spindle of lifetime z over base level pre (a 0-to-0 bridge).
    void jump(rng::RngStream& s, double pre, double z) {
        auto lo = std::upper_bound(sorted_.begin(), sorted_.end(), pre);
        auto hi = std::lower_bound(lo, sorted_.end(), pre + z);
        if (lo == hi) return;
        heights_.clear();
        for (auto it = lo; it != hi; ++it) heights_.push_back(*it - pre);
        const auto vals = besq::bridge_to_zero_values(s, 0.0, z, 4.0 + 2.0 * alpha_, heights_);
        std::size_t k = 0;
        for (auto it = lo; it != hi; ++it, ++k)
            parts_[order_[static_cast<std::size_t>(it - sorted_.begin())]].push_back(vals[k]);
    }

    /// Record a spindle given its values at the sorted levels it covers.
    void add(double y, double width) {
        auto it = std::lower_bound(sorted_.begin(), sorted_.end(), y);
        while (it != sorted_.end() && *it == y) {
            parts_[order_[static_cast<std::size_t>(it - sorted_.begin())]].push_back(width);
            ++it;
        }
    }

    /// Downward drift from `from` to `to`: counts levels y with to < y <= from.
    void drift(double from, double to) {
        auto lo = std::upper_bound(sorted_.begin(), sorted_.end(), to);
        auto hi = std::upper_bound(lo, sorted_.end(), from);
        for (auto it = lo; it != hi; ++it) ++crossings_[order_[static_cast<std::size_t>(it - sorted_.begin())]];
    }

    void add_local_time(double y, double ell) { extra_local_time_.push_back({y, ell}); }

    /// Partitions in the caller's level order; deficits from occupation local time.
    std::vector<skewer::IntervalPartition> finish(double eps, double drift_speed, bool with_deficit) const {
        auto out = parts_;
        if (!with_deficit) return out;
        const auto extra = sub_eps_mass(eps, drift_speed);
        for (std::size_t i = 0; i < out.size(); ++i) out[i].total_mass += extra[i];
        return out;
    }

    double local_time(std::size_t i, double drift_speed) const { return static_cast<double>(crossings_[i]) / drift_speed; }

    /// Expected sub-eps spindle mass at each level given the simulated local times.
    std::vector<double> sub_eps_mass(double eps, double drift_speed) const {
        std::vector<double> out(levels_.size());
        const double rate = missing_mass_rate(eps, alpha_);
        for (std::size_t i = 0; i < out.size(); ++i) {
            double ell = local_time(i, drift_speed);
            for (const auto& e : extra_local_time_)
                if (e.first == levels_[i]) ell += e.second;
            out[i] = rate * ell;
        }
        return out;
    }

private:
    double alpha_;
    std::vector<double> levels_;
    std::vector<std::size_t> order_;
    std::vector<double> sorted_;
    std::vector<skewer::IntervalPartition> parts_;
    std::vector<std::size_t> crossings_;
    std::vector<double> heights_;
    std::vector<std::pair<double, double>> extra_local_time_;
};

namespace run_detail {

inline void check_levels(const std::vector<double>& levels) {
    for (double y : levels) {
        ipd::check::require_finite(y, "level");
        if (y < 0.0) throw ParameterError("levels must be nonnegative");
    }
}

// X from `start` until it reaches `stop`, recording straddles below the recorder's top level.
inline void walk_to(rng::RngStream& s, LevelRecorder& rec, double alpha, double eps, double start, double stop) {
    const double cap = std::max(rec.top(), stop);
    TruncatedWalker w(s, alpha, eps, start);
    w.run(stop, cap, std::numeric_limits<double>::infinity(),
          [&](double, double pre, double z) { rec.jump(s, pre, z); },
          [&](double from, double to) { rec.drift(from, to); });
}

// One clade from block b: initial BESQ_b(-2 alpha) spindle, then X from its lifetime to 0.
inline void clade_into(rng::RngStream& s, LevelRecorder& rec, double b, double alpha, double eps) {
    const double T0 = besq::besq_hitting_time_zero(s, b, alpha);
    std::vector<double> ys;
    for (double y : rec.levels())
        if (y > 0.0 && y < T0) ys.push_back(y);
    std::sort(ys.begin(), ys.end());
    ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
    rec.add(0.0, b);
    if (!ys.empty()) {
        const auto vals = besq::bridge_to_zero_values(s, b, T0, 4.0 + 2.0 * alpha, ys);
        for (std::size_t k = 0; k < ys.size(); ++k) rec.add(ys[k], vals[k]);
    }
    if (rec.top() > 0.0) walk_to(s, rec, alpha, eps, T0, 0.0);
}

}  // namespace run_detail

/// Type-1 evolution at the given levels from an initial partition (one clade per block).
inline std::vector<skewer::IntervalPartition> type1_skewer_run(rng::RngStream& s, const skewer::IntervalPartition& beta0,
                                                              const std::vector<double>& levels, double alpha,
                                                              const RunOptions& opt = {}) {
    run_detail::check_levels(levels);
    LevelRecorder rec(levels, alpha);
    for (double b : beta0.blocks)
        if (b > 0.0) run_detail::clade_into(s, rec, b, alpha, opt.eps);
    return rec.finish(opt.eps, compensating_drift(opt.eps, alpha), opt.with_deficit);
}

/// Type-0 evolution: skewer of (N, u + X) stopped when X first reaches -u.
inline std::vector<skewer::IntervalPartition> type0_skewer_run(rng::RngStream& s, double u,
                                                              const std::vector<double>& levels, double alpha,
                                                              const RunOptions& opt = {}) {
    ipd::check::require_positive(u, "type-0 start level");
    run_detail::check_levels(levels);
    for (double y : levels)
        if (y > u) throw ParameterError("type-0 levels must lie in [0, u]");
    LevelRecorder rec(levels, alpha);
    run_detail::walk_to(s, rec, alpha, opt.eps, u, 0.0);
    return rec.finish(opt.eps, compensating_drift(opt.eps, alpha), opt.with_deficit);
}

/// Skewer at levels >= 0 of (N, X) started at 0 and stopped at the inverse local time tau^0_X(v),
/// built from the Poisson measure of X-excursions from 0 (central jumps of size >= eps).
inline std::vector<skewer::IntervalPartition> skewer_at_inverse_local_time(rng::RngStream& s, double v,
                                                                          const std::vector<double>& levels,
                                                                          double alpha, const RunOptions& opt = {}) {
    ipd::check::require_nonnegative(v, "local time");
    run_detail::check_levels(levels);
    LevelRecorder rec(levels, alpha);
    const auto n = rng::sample_poisson(s, v * central_jump_rate(opt.eps, alpha));
    std::vector<double> ys(levels);
    std::sort(ys.begin(), ys.end());
    ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
    std::vector<double> hs, yk;
    for (std::uint64_t i = 0; i < n; ++i) {
        const auto cj = sample_central_jump(s, opt.eps, alpha);
        hs.clear();
        yk.clear();
        for (double y : ys)
            if (cj.undershoot + y < cj.jump) {
                hs.push_back(cj.undershoot + y);
                yk.push_back(y);
            }
        if (!hs.empty()) {
            const auto vals = besq::bridge_to_zero_values(s, 0.0, cj.jump, 4.0 + 2.0 * alpha, hs);
            for (std::size_t k = 0; k < hs.size(); ++k) rec.add(yk[k], vals[k]);
        }
        const double above = cj.jump - cj.undershoot;
        if (rec.top() > 0.0) run_detail::walk_to(s, rec, alpha, opt.eps, above, 0.0);
    }
    rec.add_local_time(0.0, v);
    return rec.finish(opt.eps, compensating_drift(opt.eps, alpha), opt.with_deficit);
}

/// Leftmost spindle process L at increasing levels for X = zeta0 + (X from 0), zeta0 the
/// lifetime of a BESQ_{x0}(-2 alpha) initial spindle. Exact: uses the first-passage jump law.
inline std::vector<double> sample_leftmost_path(rng::RngStream& s, double x0, const std::vector<double>& levels,
                                                double alpha) {
    ipd::check::require_positive(x0, "initial value");
    for (std::size_t i = 1; i < levels.size(); ++i)
        if (!(levels[i] > levels[i - 1])) throw ParameterError("levels must be increasing");
    std::vector<double> out(levels.size(), 0.0);
    const double T0 = besq::besq_hitting_time_zero(s, x0, alpha);
    std::size_t j = 0;
    std::vector<double> hs;
    for (; j < levels.size() && levels[j] <= 0.0; ++j) out[j] = (levels[j] == 0.0) ? x0 : 0.0;
    {
        hs.clear();
        std::size_t k = j;
        while (k < levels.size() && levels[k] < T0) hs.push_back(levels[k++]);
        if (!hs.empty()) {
            const auto vals = besq::bridge_to_zero_values(s, x0, T0, 4.0 + 2.0 * alpha, hs);
            for (std::size_t i = 0; i < hs.size(); ++i) out[j + i] = vals[i];
        }
        j = k;
    }
    double pos = T0;
    while (j < levels.size()) {
        const auto fp = sample_first_passage_up(s, std::max(levels[j] - pos, 1e-300), alpha);
        const double base = levels[j] - fp.undershoot;
        const double top = base + fp.jump;
        hs.clear();
        std::size_t k = j;
        while (k < levels.size() && levels[k] < top) hs.push_back(levels[k++] - base);
        const auto vals = besq::bridge_to_zero_values(s, 0.0, fp.jump, 4.0 + 2.0 * alpha, hs);
        for (std::size_t i = 0; i < hs.size(); ++i) out[j + i] = vals[i];
        j = k;
        pos = top;
    }
    return out;
}

}  // namespace ipd::scaffolding
