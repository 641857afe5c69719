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
#include "ipd/rng.hpp"

namespace ipd::scaffolding {

inline constexpr double kNoCap = std::numeric_limits<double>::infinity();

struct Jump {
    double time = 0.0;
    double pre_level = 0.0;  // X(s-)
    besq::Spindle spindle;
    double excised = 0.0;  // time spent above the cap after this jump; X then resumes at the cap

    double size() const { return spindle.lifetime; }
    double post_level() const { return pre_level + spindle.lifetime; }
    bool straddles(double y) const { return pre_level < y && y < post_level(); }
};

/// The marked scaffolding (N, X) on [0, horizon]:
/// X(s) = initial_level + drift_rate * s + sum of jump sizes up to s.
/// With a finite cap, excursions above the cap are excised: the jump keeps its
/// spindle and X resumes at the cap after `excised` units of time.
struct MarkedScaffolding {
    std::vector<Jump> jumps;
    double drift_rate = 0.0;  // negative
    double eps = 0.0;
    double horizon = 0.0;
    double initial_level = 0.0;
    double alpha = 0.5;
    double cap = kNoCap;
    bool sparse = false;  // Pi((eps,inf)) * horizon < 1

    /// Calls f(t0, t1, x0) for each drift segment [t0, t1) on which X = x0 + drift_rate (t - t0),
    /// and g(jump, x) after each jump with the post-jump level x.
    template <class F, class G>
    void walk(F&& f, G&& g) const {
        double x = initial_level, t = 0.0;
        for (const auto& j : jumps) {
            f(t, j.time, x);
            x = j.pre_level + j.size();
            g(j, x);
            t = j.time;
            if (j.excised > 0.0) {
                x = cap;
                t += j.excised;
            }
        }
        f(t, std::max(t, horizon), x);
    }

    double level_at(double s) const { return level(s, false); }
    double level_before(double s) const { return level(s, true); }
    double final_level() const { return level_at(horizon); }

    /// Largest relative mismatch between stored pre-jump levels and the reconstruction.
    double reconstruction_error() const {
        double x = initial_level, t = 0.0, err = 0.0;
        for (const auto& j : jumps) {
            x += drift_rate * (j.time - t);
            t = j.time;
            err = std::max(err, std::fabs(x - j.pre_level) / std::max(1.0, std::fabs(x)));
            x += j.size();
            if (j.excised > 0.0) {
                x = cap;
                t += j.excised;
            }
        }
        return err;
    }

private:
    double level(double s, bool before) const {
        double x = initial_level, t = 0.0;
        for (const auto& j : jumps) {
            if (j.time > s || (before && j.time == s)) break;
            x += drift_rate * (j.time - t) + j.size();
            t = j.time;
            if (j.excised > 0.0) {
                if (s < t + j.excised) return std::max(x, cap);
                x = cap;
                t += j.excised;
            }
        }
        return x + drift_rate * (s - t);
    }
};

/// Spindle sampling grid: uniform with relative step plus optional exact knots at levels.
struct SpindleGrid {
    double relative_dt = 1e-3;
    std::vector<double> knot_levels;

    std::vector<double> interior(double pre_level, double zeta) const {
        std::vector<double> knots;
        for (double y : knot_levels) knots.push_back(y - pre_level);
        const auto n = static_cast<std::size_t>(std::ceil(1.0 / relative_dt));
        return besq::merged_grid(zeta, std::min(n, besq::kMaxGridPoints), std::move(knots));
    }
};

struct Clade {
    MarkedScaffolding scaffolding;
    double block_mass = 0.0;
};

/// Compound-Poisson walker for X truncated to jumps >= eps, compensated by a linear drift.
/// Optional excision above a cap: overshoots are replaced by the exact stable
/// first-passage time back down to the cap.
class TruncatedWalker {
public:
    TruncatedWalker(rng::RngStream& s, double alpha, double eps, double level)
        : s_(s), alpha_(alpha), eps_(eps), level_(level) {
        ipd::check::require_unit_open(alpha, "alpha");
        ipd::check::require_positive(eps, "eps");
        rate_ = levy_tail(eps, alpha);
        drift_ = compensating_drift(eps, alpha);
    }

    double level() const { return level_; }
    double time() const { return time_; }
    double drift_speed() const { return drift_; }
    double jump_rate() const { return rate_; }
    std::size_t jump_count() const { return jumps_; }

    void place(double level) { level_ = level; }

    /// Runs until X reaches `stop` (returns true) or time reaches `horizon` (returns false).
    /// on_jump(time, pre_level, size) is called for every jump, on_drift(from, to) for every
    /// downward drift segment.
    /// on_excise(duration) follows a jump that overshot the cap.
    template <class OnJump, class OnDrift, class OnExcise = void (*)(double)>
    bool run(double stop, double cap, double horizon, OnJump&& on_jump, OnDrift&& on_drift,
             std::size_t max_jumps = std::numeric_limits<std::size_t>::max(),
             OnExcise&& on_excise = [](double) {}) {
        if (level_ > cap) {
            const double d = sample_first_passage_time_down(s_, level_ - cap, alpha_);
            on_excise(d);
            time_ += d;
            level_ = cap;
        }
        if (level_ <= stop) return true;
        for (;;) {
            const double wait = s_.exponential() / rate_;
            if (time_ + wait > horizon) {
                const double to = level_ - drift_ * (horizon - time_);
                if (to <= stop) return finish(stop, on_drift);
                on_drift(level_, to);
                level_ = to;
                time_ = horizon;
                return false;
            }
            const double to = level_ - drift_ * wait;
            if (to <= stop) return finish(stop, on_drift);
            on_drift(level_, to);
            level_ = to;
            time_ += wait;
            const double z = sample_jump_above(s_, eps_, alpha_);
            on_jump(time_, level_, z);
            level_ += z;
            if (++jumps_ > max_jumps) throw HorizonExhausted("jump budget exhausted");
            if (level_ > cap) {
                const double d = sample_first_passage_time_down(s_, level_ - cap, alpha_);
                on_excise(d);
                time_ += d;
                level_ = cap;
            }
        }
    }

private:
    template <class OnDrift>
    bool finish(double stop, OnDrift& on_drift) {
        on_drift(level_, stop);
        time_ += (level_ - stop) / drift_;
        level_ = stop;
        return true;
    }

    rng::RngStream& s_;
    double alpha_, eps_;
    double level_;
    double time_ = 0.0;
    double rate_ = 0.0, drift_ = 0.0;
    std::size_t jumps_ = 0;
};

/// X from initial level 0 on [0, horizon] with spindle-marked jumps >= eps.
inline MarkedScaffolding sample_marked_scaffolding(rng::RngStream& s, double alpha, double eps, double horizon,
                                                   const SpindleGrid& grid = {}) {
    ipd::check::require_positive(horizon, "horizon");
    MarkedScaffolding X;
    X.alpha = alpha;
    X.eps = eps;
    X.horizon = horizon;
    TruncatedWalker w(s, alpha, eps, 0.0);
    X.drift_rate = -w.drift_speed();
    X.sparse = w.jump_rate() * horizon < 1.0;
    w.run(-std::numeric_limits<double>::infinity(), kNoCap, horizon,
          [&](double t, double pre, double z) {
              Jump j;
              j.time = t;
              j.pre_level = pre;
              j.spindle = besq::spindle_on(s, z, alpha, grid.interior(pre, z), z * grid.relative_dt);
              X.jumps.push_back(std::move(j));
          },
          [](double, double) {});
    return X;
}

/// First time X reaches `level` from above (passage happens on a drift segment).
inline double first_passage(const MarkedScaffolding& X, double level) {
    if (level >= X.initial_level) return 0.0;
    const double m = -X.drift_rate;
    double hit = -1.0;
    X.walk(
        [&](double t0, double t1, double x0) {
            if (hit < 0.0 && x0 - m * (t1 - t0) <= level) hit = t0 + (x0 - level) / m;
        },
        [](const Jump&, double) {});
    if (hit < 0.0) throw HorizonExhausted("first passage not reached before the horizon");
    return hit;
}

/// Clade from a block of mass b: BESQ_b(-2 alpha) initial spindle as a jump at time 0,
/// then X from its lifetime until the first passage of 0. A finite cap excises
/// excursions above it; skewers at levels below the cap are unaffected.
inline Clade clade_from_block(rng::RngStream& s, double b, double alpha, double eps, const SpindleGrid& grid = {},
                              double cap = kNoCap, std::size_t max_jumps = 5'000'000) {
    ipd::check::require_positive(b, "block mass");
    Clade c;
    c.block_mass = b;
    auto& X = c.scaffolding;
    X.alpha = alpha;
    X.eps = eps;
    X.cap = cap;
    X.initial_level = 0.0;
    const double T0 = besq::besq_hitting_time_zero(s, b, alpha);
    Jump first;
    first.time = 0.0;
    first.pre_level = 0.0;
    first.spindle.lifetime = T0;
    first.spindle.profile = besq::besq_neg_path_on(s, b, alpha, T0, grid.interior(0.0, T0));
    X.jumps.push_back(std::move(first));
    TruncatedWalker w(s, alpha, eps, T0);
    X.drift_rate = -w.drift_speed();
    w.run(0.0, cap, std::numeric_limits<double>::infinity(),
          [&](double t, double pre, double z) {
              Jump j;
              j.time = t;
              j.pre_level = pre;
              j.spindle = besq::spindle_on(s, z, alpha, grid.interior(pre, z), z * grid.relative_dt);
              X.jumps.push_back(std::move(j));
          },
          [](double, double) {}, max_jumps, [&](double d) { X.jumps.back().excised = d; });
    X.horizon = w.time();
    return c;
}

/// Concatenation of clades in order, jump times shifted by the preceding durations.
inline MarkedScaffolding stitch(std::vector<Clade>&& clades) {
    MarkedScaffolding X;
    std::size_t total = 0;
    for (const auto& c : clades) total += c.scaffolding.jumps.size();
    X.jumps.reserve(total);
    double offset = 0.0;
    for (auto& c : clades) {
        auto& Y = c.scaffolding;
        if (X.jumps.empty() && X.horizon == 0.0) {
            X.alpha = Y.alpha;
            X.eps = Y.eps;
            X.drift_rate = Y.drift_rate;
            X.cap = Y.cap;
        }
        for (auto& j : Y.jumps) {
            j.time += offset;
            X.jumps.push_back(std::move(j));
        }
        offset += Y.horizon;
        X.horizon = offset;
    }
    return X;
}

inline MarkedScaffolding stitch(const std::vector<Clade>& clades) { return stitch(std::vector<Clade>(clades)); }

/// Nondecreasing step function of scaffolding time.
struct StepFunction {
    std::vector<double> times;
    std::vector<double> values;

    double at(double t) const {
        const auto it = std::upper_bound(times.begin(), times.end(), t);
        return it == times.begin() ? 0.0 : values[static_cast<std::size_t>(it - times.begin()) - 1];
    }

    /// Right-continuous inverse: first time the value exceeds v.
    double inverse(double v) const {
        for (std::size_t i = 0; i < values.size(); ++i)
            if (values[i] > v) return times[i];
        throw HorizonExhausted("local time level not reached before the horizon");
    }
};

/// Local time of X at 0 by threshold counting: excursions above 0 with supremum above y_calib,
/// each worth 1 / (2^-alpha y_calib^-alpha). Increments are placed at the excursion's end.
inline StepFunction local_time_zero(const MarkedScaffolding& X, double y_calib) {
    ipd::check::require_positive(y_calib, "calibration level");
    if (y_calib < 10.0 * X.eps) throw ResolutionError("calibration level below the truncation resolution");
    const double unit = 1.0 / biclade_sup_rate(y_calib, X.alpha);
    const double m = -X.drift_rate;
    StepFunction L;
    double sup = X.initial_level, count = 0.0;
    bool above = X.initial_level > 0.0;
    X.walk(
        [&](double t0, double t1, double x0) {
            if (above && x0 - m * (t1 - t0) <= 0.0) {
                if (sup > y_calib) {
                    count += unit;
                    L.times.push_back(t0 + x0 / m);
                    L.values.push_back(count);
                }
                above = false;
            }
        },
        [&](const Jump&, double x) {
            if (!above && x > 0.0) {
                above = true;
                sup = x;
            }
            sup = std::max(sup, x);
        });
    return L;
}

/// Occupation-density local time at level y: down-crossings divided by the drift speed.
inline double occupation_local_time(const MarkedScaffolding& X, double y) {
    const double m = -X.drift_rate;
    std::size_t n = 0;
    X.walk(
        [&](double t0, double t1, double x0) {
            if (x0 - m * (t1 - t0) < y && y <= x0) ++n;
        },
        [](const Jump&, double) {});
    return static_cast<double>(n) / m;
}

/// Value of the first spindle crossing each level, scanning in time order.
/// A spindle at time 0 counts at its base level with its initial mass.
inline std::vector<double> leftmost_spindle_process(const MarkedScaffolding& X, const std::vector<double>& levels) {
    std::vector<double> out;
    out.reserve(levels.size());
    const double x0 = X.jumps.empty() || X.jumps.front().time > 0.0 ? X.initial_level : X.jumps.front().pre_level;
    for (double y : levels) {
        if (y <= x0) {
            const bool base = !X.jumps.empty() && X.jumps.front().time == 0.0 && X.jumps.front().pre_level == y;
            out.push_back(base ? X.jumps.front().spindle.initial_mass() : 0.0);
            continue;
        }
        bool found = false;
        for (const auto& j : X.jumps) {
            if (j.straddles(y)) {
                out.push_back(j.spindle.value_at(y - j.pre_level));
                found = true;
                break;
            }
        }
        if (found) continue;
        throw HorizonExhausted("level not crossed before the horizon");
    }
    return out;
}

}  // namespace ipd::scaffolding
