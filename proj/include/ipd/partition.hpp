#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "ipd/error.hpp"

namespace ipd::skewer {

/// Ordered block lengths plus total mass. total_mass - sum(blocks) is the
/// truncation deficit: mass carried by blocks too small to be simulated.
struct IntervalPartition {
    std::vector<double> blocks;
    double total_mass = 0.0;

    static IntervalPartition from_blocks(std::vector<double> b) {
        IntervalPartition p;
        p.blocks = std::move(b);
        p.total_mass = p.block_sum();
        return p;
    }

    double block_sum() const { return std::accumulate(blocks.begin(), blocks.end(), 0.0); }
    double deficit() const { return std::max(0.0, total_mass - block_sum()); }
    std::size_t block_count() const { return blocks.size(); }
    bool empty() const { return blocks.empty() && total_mass == 0.0; }

    double largest() const { return blocks.empty() ? 0.0 : *std::max_element(blocks.begin(), blocks.end()); }

    void push_back(double b) {
        blocks.push_back(b);
        total_mass += b;
    }
};

inline bool operator==(const IntervalPartition& a, const IntervalPartition& b) {
    return a.blocks == b.blocks && a.total_mass == b.total_mass;
}

inline IntervalPartition concatenate(const std::vector<IntervalPartition>& parts) {
    IntervalPartition out;
    for (const auto& p : parts) {
        out.blocks.insert(out.blocks.end(), p.blocks.begin(), p.blocks.end());
        out.total_mass += p.total_mass;
    }
    return out;
}

namespace detail {

// Complement of the blocks as a sorted union of closed segments (points have a == b).
// Blocks tile [0, sum]; a deficit leaves the segment [sum, M] uncovered.
inline std::vector<std::pair<double, double>> complement(const IntervalPartition& p) {
    std::vector<std::pair<double, double>> c;
    c.emplace_back(0.0, 0.0);
    double acc = 0.0;
    for (double b : p.blocks) {
        acc += b;
        c.emplace_back(acc, acc);
    }
    const double m = std::max(p.total_mass, acc);
    if (m > acc) c.back().second = m;
    return c;
}

inline double dist_to(const std::vector<std::pair<double, double>>& set, double x) {
    auto it = std::lower_bound(set.begin(), set.end(), x,
                               [](const std::pair<double, double>& seg, double v) { return seg.second < v; });
    double d = std::numeric_limits<double>::infinity();
    if (it != set.end()) d = std::min(d, std::max(0.0, it->first - x));
    if (it != set.begin()) d = std::min(d, x - std::prev(it)->second);
    return d;
}

// sup over x in A of dist(x, B); attained at segment endpoints of A or at
// midpoints of gaps of B lying inside A.
inline double directed(const std::vector<std::pair<double, double>>& a,
                       const std::vector<std::pair<double, double>>& b) {
    double h = 0.0;
    for (const auto& seg : a) {
        h = std::max(h, dist_to(b, seg.first));
        h = std::max(h, dist_to(b, seg.second));
    }
    for (std::size_t i = 1; i < b.size(); ++i) {
        const double mid = 0.5 * (b[i - 1].second + b[i].first);
        for (const auto& seg : a)
            if (seg.first <= mid && mid <= seg.second) h = std::max(h, dist_to(b, mid));
    }
    return h;
}

}  // namespace detail

/// Hausdorff distance between complements, endpoints 0 and M included.
inline double dH(const IntervalPartition& beta, const IntervalPartition& gamma) {
    const auto a = detail::complement(beta);
    const auto b = detail::complement(gamma);
    return std::max(detail::directed(a, b), detail::directed(b, a));
}

}  // namespace ipd::skewer
