#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "ipd/runs.hpp"
#include "ipd/skewer.hpp"
#include "ipd/verify.hpp"

using namespace ipd;
using namespace ipd::scaffolding;
using Catch::Approx;

namespace {

struct Passed {};

// Leftmost spindle values by brute force: truncated walker from T0, spindle sampled at the crossing.
// Returns an empty vector when the jump budget runs out (heavy-tailed passage times).
std::vector<double> leftmost_by_walker(rng::RngStream& s, double x0, const std::vector<double>& ys, double alpha,
                                       double eps) {
    const double T0 = besq::besq_hitting_time_zero(s, x0, alpha);
    std::vector<double> out(ys.size(), -1.0);
    std::size_t next = 0;
    for (; next < ys.size() && ys[next] <= 0.0; ++next) out[next] = x0;
    {
        std::vector<double> inner;
        for (std::size_t k = next; k < ys.size() && ys[k] < T0; ++k) inner.push_back(ys[k]);
        if (!inner.empty()) {
            const auto p = besq::besq_neg_path_on(s, x0, alpha, T0, inner);
            for (std::size_t i = 0; i < inner.size(); ++i) out[next + i] = p.values[i + 1];
            next += inner.size();
        }
    }
    if (next == ys.size()) return out;
    TruncatedWalker w(s, alpha, eps, T0);
    try {
        w.run(-std::numeric_limits<double>::infinity(), kNoCap, std::numeric_limits<double>::infinity(),
              [&](double, double pre, double z) {
                  while (next < ys.size() && pre + z > ys[next]) {
                      std::vector<double> hs;
                      std::size_t k = next;
                      while (k < ys.size() && ys[k] < pre + z) hs.push_back(ys[k++] - pre);
                      const auto f = besq::spindle_on(s, z, alpha, hs);
                      for (std::size_t i = 0; i < hs.size(); ++i) out[next + i] = f.profile.values[i + 1];
                      next = k;
                  }
                  if (next == ys.size()) throw Passed{};
              },
              [](double, double) {}, 1'000'000);
    } catch (const Passed&) {
    } catch (const HorizonExhausted&) {
        return {};
    }
    return out;
}

}  // namespace

TEST_CASE("type-1 run at level 0 returns the initial partition") {
    rng::RngStream s(61, 0);
    const auto beta0 = skewer::IntervalPartition::from_blocks({0.3, 1.0, 0.05});
    const auto out = type1_skewer_run(s, beta0, {0.0}, 0.5, {1e-2, true});
    REQUIRE(out.size() == 1);
    REQUIRE(out[0].blocks == beta0.blocks);
    REQUIRE(out[0].total_mass == Approx(beta0.total_mass));
    REQUIRE_THROWS_AS(type1_skewer_run(s, beta0, {-1.0}, 0.5), ParameterError);
}

TEST_CASE("single clade: survival, mean mass, variance") {
    const double alpha = 0.5, b = 1.0;
    const std::vector<double> ys{0.25, 0.5, 1.0};
    rng::RngStream s(62, 0);
    const auto beta0 = skewer::IntervalPartition::from_blocks({b});
    std::vector<std::vector<double>> mass(ys.size());
    std::vector<verify::MomentSummary> alive(ys.size());
    for (int i = 0; i < 10000; ++i) {
        const auto out = type1_skewer_run(s, beta0, ys, alpha, {1e-3, false});
        for (std::size_t k = 0; k < ys.size(); ++k) {
            mass[k].push_back(out[k].total_mass);
            alive[k].add(out[k].block_count() > 0 ? 1.0 : 0.0);
        }
    }
    for (std::size_t k = 0; k < ys.size(); ++k) {
        const auto m = verify::summarize(mass[k]);
        INFO("y " << ys[k] << " mean " << m.mean << " var " << m.variance());
        REQUIRE(std::fabs(m.z(b)) < 4.0);
        REQUIRE(std::fabs(m.variance() - 4.0 * b * ys[k]) < 4.0 * verify::variance_se(mass[k]) + 0.05 * 4.0 * b * ys[k]);
        REQUIRE(std::fabs(alive[k].z(1.0 - std::exp(-b / (2.0 * ys[k])))) < 4.0);
    }
}

TEST_CASE("streamed run agrees with explicit clades") {
    const double alpha = 0.5, eps = 5e-3, y = 0.4;
    rng::RngStream s(63, 0);
    const auto beta0 = skewer::IntervalPartition::from_blocks({0.7});
    std::vector<double> streamed, explicit_, lead_a, lead_b;
    SpindleGrid grid;
    grid.relative_dt = 0.5;
    grid.knot_levels = {y};
    for (int i = 0; i < 3000; ++i) {
        const auto p = type1_skewer_run(s, beta0, {y}, alpha, {eps, false})[0];
        streamed.push_back(p.total_mass);
        if (!p.blocks.empty()) lead_a.push_back(p.blocks.front());
        const auto c = clade_from_block(s, 0.7, alpha, eps, grid, 2.0 * y);
        const auto q = skewer::skewer(c.scaffolding, y);
        explicit_.push_back(q.total_mass);
        if (!q.blocks.empty()) lead_b.push_back(q.blocks.front());
    }
    REQUIRE(verify::ks_two_sample(streamed, explicit_).p_value > 0.01);
    REQUIRE(verify::ks_two_sample(lead_a, lead_b).p_value > 0.01);
}

TEST_CASE("type-0 run") {
    const double alpha = 0.5, u = 1.0;
    const std::vector<double> ys{0.0, 0.25, 0.5, 1.0};
    rng::RngStream s(64, 0);
    const double eps = 3e-4;
    std::vector<verify::MomentSummary> m(ys.size());
    for (int i = 0; i < 4000; ++i) {
        const auto out = type0_skewer_run(s, u, ys, alpha, {eps, false});
        REQUIRE(out[0].block_count() == 0);
        REQUIRE(out[0].total_mass == 0.0);
        for (std::size_t k = 0; k < ys.size(); ++k) m[k].add(out[k].total_mass);
    }
    // truncation below eps lowers the mean by up to about 0.5 (eps / y)^{1/2} relative
    for (std::size_t k = 1; k < ys.size(); ++k) {
        const double target = 2.0 * alpha * ys[k];
        const double slack = 4.0 * m[k].se() + 0.5 * std::sqrt(eps / ys[k]) * target;
        INFO("y " << ys[k] << " mean " << m[k].mean << " z " << m[k].z(target));
        REQUIRE(std::fabs(m[k].mean - target) < slack);
    }
    REQUIRE_THROWS_AS(type0_skewer_run(s, u, {1.5}, alpha), ParameterError);
    REQUIRE_THROWS_AS(type0_skewer_run(s, 0.0, {0.0}, alpha), ParameterError);
    const auto d = type0_skewer_run(s, u, {0.5}, alpha, {1e-2, true});
    REQUIRE(d[0].deficit() > 0.0);
}

TEST_CASE("skewer at inverse local time: central spindle masses") {
    // blocks at level 0 form a Poisson process with intensity (alpha / Gamma(1-alpha)) x^{-1-alpha} per unit local time
    const double alpha = 0.5, v = 1.0, x0 = 0.1;
    rng::RngStream s(65, 0);
    verify::MomentSummary count;
    std::vector<double> big;
    for (int i = 0; i < 4000; ++i) {
        const auto out = skewer_at_inverse_local_time(s, v, {0.0}, alpha, {1e-3, false});
        double n = 0.0;
        for (double x : out[0].blocks)
            if (x > x0) {
                n += 1.0;
                big.push_back(x);
            }
        count.add(n);
    }
    REQUIRE(std::fabs(count.z(v * std::pow(x0, -alpha) / std::tgamma(1.0 - alpha))) < 4.0);
    REQUIRE(verify::ks_one_sample(big, [&](double x) { return 1.0 - std::pow(x0 / x, alpha); }).p_value > 0.01);
}

TEST_CASE("exact leftmost path against the brute-force walker") {
    const double alpha = 0.5, x0 = 1.0;
    const std::vector<double> ys{0.0, 0.2, 0.5, 0.9};
    rng::RngStream s(66, 0);
    std::vector<std::vector<double>> a(ys.size()), b(ys.size());
    int censored = 0;
    const int n = 2000;
    for (int i = 0; i < n; ++i) {
        const auto e = sample_leftmost_path(s, x0, ys, alpha);
        REQUIRE(e[0] == x0);
        for (std::size_t k = 1; k < ys.size(); ++k) {
            REQUIRE(e[k] > 0.0);
            a[k].push_back(e[k]);
        }
        const auto w = leftmost_by_walker(s, x0, ys, alpha, 1e-2);
        if (w.empty()) {
            ++censored;
            continue;
        }
        for (std::size_t k = 1; k < ys.size(); ++k) b[k].push_back(w[k]);
    }
    // censored oracle paths shift its CDF by at most the censored fraction, well under the KS critical value
    REQUIRE(censored < n / 20);
    for (std::size_t k = 1; k < ys.size(); ++k) {
        const auto ks = verify::ks_two_sample(a[k], b[k]);
        INFO("y " << ys[k] << " D " << ks.statistic);
        REQUIRE(ks.p_value > 0.01);
    }
    REQUIRE_THROWS_AS(sample_leftmost_path(s, x0, {0.5, 0.2}, alpha), ParameterError);
}
