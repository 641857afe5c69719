#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "ipd/rng.hpp"
#include "ipd/verify.hpp"

using namespace ipd;
using Catch::Approx;

namespace {

std::vector<double> exp_sample(rng::RngStream& s, std::size_t n, double rate) {
    std::vector<double> v(n);
    for (auto& x : v) x = s.exponential() / rate;
    return v;
}

}  // namespace

TEST_CASE("two-sample KS") {
    rng::RngStream s(91, 0);
    const auto a = exp_sample(s, 10000, 1.0);
    const auto same = verify::ks_two_sample(a, a);
    REQUIRE(same.statistic == 0.0);
    REQUIRE(same.p_value == 1.0);
    REQUIRE(verify::ks_two_sample(a, exp_sample(s, 10000, 2.0)).p_value < 1e-6);
    REQUIRE_THROWS_AS(verify::ks_two_sample({1.0, 2.0}, a), ParameterError);

    // null calibration: p roughly uniform
    verify::MomentSummary p;
    int reject = 0;
    for (int i = 0; i < 200; ++i) {
        const auto r = verify::ks_two_sample(exp_sample(s, 2000, 1.0), exp_sample(s, 2000, 1.0));
        p.add(r.p_value);
        if (r.p_value < 0.05) ++reject;
    }
    REQUIRE(p.mean == Approx(0.5).margin(0.08));
    REQUIRE(reject <= 20);  // 2x the nominal 10 of 200
}

TEST_CASE("one-sample KS") {
    rng::RngStream s(92, 0);
    auto cdf = [](double x) { return x <= 0.0 ? 0.0 : -std::expm1(-x); };
    REQUIRE(verify::ks_one_sample(exp_sample(s, 5000, 1.0), cdf).p_value > 0.001);
    REQUIRE(verify::ks_one_sample(exp_sample(s, 5000, 1.2), cdf).p_value < 1e-6);
    int reject = 0;
    for (int i = 0; i < 200; ++i)
        if (verify::ks_one_sample(exp_sample(s, 1000, 1.0), cdf).p_value < 0.05) ++reject;
    REQUIRE(reject <= 20);
}

TEST_CASE("Kolmogorov tail") {
    // P(K > 1.36) ~ 0.05, P(K > 1.63) ~ 0.01
    REQUIRE(verify::kolmogorov_q(1.3581) == Approx(0.05).margin(5e-4));
    REQUIRE(verify::kolmogorov_q(1.6276) == Approx(0.01).margin(2e-4));
    REQUIRE(verify::kolmogorov_q(0.0) == 1.0);
}

TEST_CASE("Hill tail index") {
    rng::RngStream s(93, 0);
    std::vector<double> pareto(100000);
    for (auto& x : pareto) x = rng::sample_pareto(s, 1.0, 1.5);
    rng::RngStream boot(93, 1);
    const auto h = verify::hill_tail_index(pareto, 0.01, &boot, 200);
    REQUIRE(h.index == Approx(1.5).margin(0.05 * 3));  // k = 1000: sd 1.5/sqrt(1000) = 0.047
    REQUIRE(h.ci_low < 1.5);
    REQUIRE(h.ci_high > 1.5);
    REQUIRE(h.heavy_tailed);
    REQUIRE(h.sweep.size() == 3);

    const auto e = verify::hill_tail_index(exp_sample(s, 100000, 1.0), 0.01);
    REQUIRE_FALSE(e.heavy_tailed);
    REQUIRE_THROWS_AS(verify::hill_tail_index(std::vector<double>(100, 1.0), 0.01), ParameterError);
}

TEST_CASE("Hill estimate within 0.05 on Pareto(1.5) at n = 1e5") {
    // over repeated seeds the estimate is within 0.05 most of the time and centred on 1.5
    rng::RngStream s(94, 0);
    verify::MomentSummary m;
    int within = 0;
    for (int r = 0; r < 50; ++r) {
        std::vector<double> pareto(100000);
        for (auto& x : pareto) x = rng::sample_pareto(s, 1.0, 1.5);
        const double h = verify::hill_tail_index(pareto, 0.01).index;
        m.add(h);
        if (std::fabs(h - 1.5) <= 0.05) ++within;
    }
    REQUIRE(std::fabs(m.z(1.5)) < 4.0);
    REQUIRE(within >= 30);
}

TEST_CASE("Monte Carlo Laplace comparison") {
    rng::RngStream s(95, 0);
    const auto x = exp_sample(s, 20000, 1.0);
    const std::vector<double> g{0.0, 0.5, 1.0, 2.0};
    const auto ok = verify::mc_laplace_compare(x, g, [](double q) { return 1.0 / (1.0 + q); }, "exp", "exponential law");
    REQUIRE(ok.pass);
    REQUIRE(ok.details["rows"][0]["z"] == 0.0);
    REQUIRE(ok.anchor == "exponential law");
    const auto bad = verify::mc_laplace_compare(x, g, [](double q) { return 1.2 / (1.2 + q); }, "exp", "");
    REQUIRE_FALSE(bad.pass);
    REQUIRE_THROWS_AS(verify::mc_laplace_compare({1.0}, g, [](double) { return 1.0; }, "", ""), ParameterError);
    int reject = 0;
    for (int i = 0; i < 200; ++i)
        if (!verify::mc_laplace_compare(exp_sample(s, 1000, 1.0), {1.0}, [](double q) { return 1.0 / (1.0 + q); }, "", "", 2.0).pass)
            ++reject;
    REQUIRE(reject <= 18);  // |z| > 2 has nominal rate 4.55%
}

TEST_CASE("rate ratio fits") {
    std::mt19937_64 eng(96);
    std::vector<verify::RateCount> c, flat;
    const std::vector<double> ys{0.1, 0.2, 0.4, 0.8, 1.6};
    for (double y : ys) {
        std::poisson_distribution<long> p(20000.0 * std::pow(y, -0.5));
        c.push_back({y, static_cast<double>(p(eng)), 1.0});
        std::poisson_distribution<long> q(5000.0);
        flat.push_back({y, static_cast<double>(q(eng)), 1.0});
    }
    const auto fit = verify::fit_power_law(c);
    REQUIRE(fit.slope == Approx(-0.5).margin(0.05));
    REQUIRE(fit.amplitude == Approx(20000.0).epsilon(0.05));
    REQUIRE(verify::fit_power_law(flat).slope == Approx(0.0).margin(0.05));
    REQUIRE(verify::rate_ratio_test(c, [](double y) { return 20000.0 * std::pow(y, -0.5); }).pass);
    REQUIRE_FALSE(verify::rate_ratio_test(c, [](double y) { return 20000.0 * std::pow(y, -0.6); }).pass);
    REQUIRE_FALSE(verify::rate_ratio_test(c, [](double y) { return 25000.0 * std::pow(y, -0.5); }).pass);
    c[2].count = 0.0;
    REQUIRE_THROWS_AS(verify::fit_power_law(c), ParameterError);
}

TEST_CASE("aggregation is order independent") {
    rng::RngStream s(97, 0);
    std::vector<std::pair<std::size_t, verify::MomentSummary>> parts;
    for (std::size_t k = 0; k < 20; ++k) {
        verify::MomentSummary m;
        for (int i = 0; i < 37; ++i) m.add(s.normal() * 3.0 + 1.0);
        parts.emplace_back(k, m);
    }
    const auto a = verify::fold_by_index(parts);
    std::reverse(parts.begin(), parts.end());
    const auto b = verify::fold_by_index(parts);
    std::swap(parts[3], parts[11]);
    const auto c = verify::fold_by_index(parts);
    REQUIRE(a.mean == b.mean);
    REQUIRE(a.m2 == b.m2);
    REQUIRE(a.mean == c.mean);
    REQUIRE(a.n == 740.0);
}

TEST_CASE("report serialization") {
    verify::TestReport r;
    r.name = "x";
    r.statistic = std::numeric_limits<double>::infinity();
    const auto j = verify::to_json(r);
    REQUIRE(j["statistic"].is_null());
    REQUIRE(j["pass"] == false);
}
