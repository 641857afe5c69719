#pragma once

#include <algorithm>
#include <vector>

#include "ipd/partition.hpp"
#include "ipd/scaffolding.hpp"

namespace ipd::skewer {

/// M^y(s): sum of spindle widths at level y over jumps up to time s.
inline double aggregate_mass(const scaffolding::MarkedScaffolding& X, double y, double s) {
    double m = 0.0;
    for (const auto& j : X.jumps) {
        if (j.time > s) break;
        if (j.straddles(y) || (j.pre_level == y && j.spindle.initial_mass() > 0.0))
            m += j.spindle.value_at(y - j.pre_level);
    }
    return m;
}

/// Spindle widths at level y in scaffolding-time order.
inline IntervalPartition skewer(const scaffolding::MarkedScaffolding& X, double y) {
    IntervalPartition p;
    for (const auto& j : X.jumps) {
        const bool at_base = j.pre_level == y && j.spindle.initial_mass() > 0.0;
        if (!j.straddles(y) && !at_base) continue;
        const double v = j.spindle.value_at(y - j.pre_level);
        if (v > 0.0) p.push_back(v);
    }
    return p;
}

/// Largest d_H between skewers at consecutive levels.
inline double path_continuity_stat(const std::vector<IntervalPartition>& skewers) {
    double h = 0.0;
    for (std::size_t i = 1; i < skewers.size(); ++i) h = std::max(h, dH(skewers[i - 1], skewers[i]));
    return h;
}

}  // namespace ipd::skewer
