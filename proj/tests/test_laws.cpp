#include <catch_amalgamated.hpp>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <vector>

#include "ipd/laws.hpp"
#include "ipd/runs.hpp"
#include "ipd/verify.hpp"

using namespace ipd;
using Catch::Approx;

namespace {

double pi_y_density(double s, double y, double d) {
    return (1.0 - d) / std::tgamma(d) * std::pow(s, d - 2.0) * std::exp(-s / y);
}

}  // namespace

TEST_CASE("leftmost semigroup Laplace transform") {
    for (double d : {0.3, 0.5, 0.7})
        for (double x : {0.0, 0.5, 3.0})
            for (double y : {0.5, 1.0, 2.0}) REQUIRE(laws::lt_leftmost_semigroup(x, y, 0.0, d) == Approx(1.0).epsilon(1e-14));
    REQUIRE(laws::lt_leftmost_semigroup(0.0, 1.0, 1.0, 0.5) == Approx(std::sqrt(3.0) - std::sqrt(2.0)).epsilon(1e-14));
    double prev = 1.0;
    for (double g = 0.0; g <= 20.0; g += 0.25) {
        const double v = laws::lt_leftmost_semigroup(1.0, 0.7, g, 0.4);
        REQUIRE(v <= prev + 1e-15);
        REQUIRE(v >= 0.0);
        prev = v;
    }
    // the printed exponent x/(2+4 gamma y) agrees at y = 1 only
    auto printed = [](double x, double y, double g, double d) {
        return std::exp(-x / (2 * y)) * (std::pow(1 + 2 * g * y, 1 - d) * std::exp(x / (2 + 4 * g * y)) - std::pow(2 * g * y, 1 - d));
    };
    REQUIRE(laws::lt_leftmost_semigroup(0.8, 1.0, 0.6, 0.5) == Approx(printed(0.8, 1.0, 0.6, 0.5)).epsilon(1e-13));
    REQUIRE(printed(1.0, 2.0, 0.0, 0.5) != Approx(1.0).epsilon(1e-3));
    REQUIRE_THROWS_AS(laws::lt_leftmost_semigroup(-1.0, 1.0, 1.0, 0.5), ParameterError);
    REQUIRE_THROWS_AS(laws::lt_leftmost_semigroup(1.0, 0.0, 1.0, 0.5), ParameterError);
    REQUIRE_THROWS_AS(laws::lt_leftmost_semigroup(1.0, 1.0, 1.0, 1.0), ParameterError);
}

TEST_CASE("leftmost semigroup against the exact leftmost process") {
    const double alpha = 0.5, d = 1.0 - alpha;
    rng::RngStream s(81, 0);
    for (double x : {0.5, 1.0}) {
        std::vector<double> a, b;
        for (int i = 0; i < 4000; ++i) {
            const auto L = scaffolding::sample_leftmost_path(s, x, {0.5, 2.0}, alpha);
            a.push_back(L[0]);
            b.push_back(L[1]);
        }
        const auto ra = verify::mc_laplace_compare(a, {0.5, 1.0, 2.0}, [&](double g) { return laws::lt_leftmost_semigroup(x, 0.5, g, d); }, "leftmost", "");
        const auto rb = verify::mc_laplace_compare(b, {0.5, 1.0, 2.0}, [&](double g) { return laws::lt_leftmost_semigroup(x, 2.0, g, d); }, "leftmost", "");
        INFO("x " << x << " z " << ra.z_score << " " << rb.z_score);
        REQUIRE(ra.pass);
        REQUIRE(rb.pass);
        // the halved dictionary L(y)/2 is rejected
        for (auto& v : a) v *= 0.5;
        REQUIRE_FALSE(verify::mc_laplace_compare(a, {0.5, 1.0, 2.0}, [&](double g) { return laws::lt_leftmost_semigroup(x, 0.5, g, d); }, "leftmost", "").pass);
    }
}

TEST_CASE("kernel p_y and the leftmost clade block") {
    for (double d : {0.3, 0.5})
        for (double x : {0.2, 1.0, 4.0}) {
            REQUIRE(laws::lt_kernel_p_y(x, 0.7, 0.0, d) == Approx(1.0 - std::exp(-x / 0.7)).epsilon(1e-14));
            REQUIRE(laws::lt_kernel_p_y(x, 0.7, 1e-9, d) <= laws::lt_kernel_p_y(x, 0.7, 0.0, d));
        }
    REQUIRE(laws::lt_kernel_p_y(1.0, 1.0, 1.0, 0.5) == Approx(std::sqrt(2.0) * (std::exp(-0.5) - std::exp(-1.0))).epsilon(1e-14));
    REQUIRE(laws::lt_kernel_p_y(200.0, 1.0, 1.0, 0.5) < 1e-40);
    REQUIRE_THROWS_AS(laws::lt_kernel_p_y(0.0, 1.0, 1.0, 0.5), ParameterError);

    // block scale b = 2x, gamma on blocks = gamma / 2 on masses
    for (double b : {0.5, 1.0, 3.0})
        for (double y : {0.25, 1.0})
            for (double g : {0.0, 0.5, 1.0, 2.0}) {
                const double r = 0.5 / y;
                const double lhs = laws::lt_type1_leftmost(b, y, g, 0.5) * (-std::expm1(-b * r));
                REQUIRE(lhs == Approx(laws::lt_kernel_p_y(0.5 * b, y, 2.0 * g, 0.5)).epsilon(1e-12));
            }
    REQUIRE(laws::lt_type1_leftmost(1.0, 0.5, 0.0, 0.5) == Approx(1.0).epsilon(1e-14));
    REQUIRE(laws::lt_type1_leftmost(1.0, 0.5, 1.0, 0.5) ==
            Approx(std::sqrt(2.0) * (std::exp(0.5) - 1.0) / (std::exp(1.0) - 1.0)).epsilon(1e-14));
    REQUIRE(std::isfinite(laws::lt_type1_leftmost(5000.0, 0.5, 1.0, 0.5)));
}

TEST_CASE("leftmost clade block against simulation") {
    const double alpha = 0.5, b = 1.0, y = 0.5;
    rng::RngStream s(82, 0);
    const auto beta0 = skewer::IntervalPartition::from_blocks({b});
    std::vector<double> left;
    for (int i = 0; i < 4000; ++i) {
        const auto out = scaffolding::type1_skewer_run(s, beta0, {y}, alpha, {2e-3, false});
        left.push_back(out[0].blocks.empty() ? 0.0 : out[0].blocks.front());
    }
    // unconditional transform: survival times the conditional one plus the extinct part
    const auto r = verify::mc_laplace_compare(left, {0.5, 1.0, 2.0}, [&](double g) {
        const double surv = -std::expm1(-b / (2.0 * y));
        return laws::lt_type1_leftmost(b, y, g, alpha) * surv + (1.0 - surv);
    }, "leftmost", "");
    INFO(r.details.dump());
    REQUIRE(r.pass);
}

TEST_CASE("phi_y for exponential test functions") {
    for (double d : {0.3, 0.5, 0.8})
        for (double y : {0.3, 1.0, 2.5})
            for (double g : {0.0, 0.4, 1.0, 3.0}) {
                // denominator by quadrature of its defining integral
                auto f = [&](double s) {
                    const double v = -std::expm1(-g * s) * pi_y_density(s, y, d);
                    return std::isfinite(v) ? v : 0.0;
                };
                boost::math::quadrature::tanh_sinh<double> ts;
                boost::math::quadrature::exp_sinh<double> es;
                const double q = ts.integrate(f, 0.0, 1.0) + es.integrate(f, 1.0, std::numeric_limits<double>::infinity());
                const double den = laws::phi_y_denominator(g, y, d);
                REQUIRE(den == Approx(1.0 + std::pow(y, 1.0 - d) * q).epsilon(1e-6));
                if (g > 0.0) REQUIRE(den > 1.0);
                for (double x : {0.0, 0.3, 2.0})
                    REQUIRE(laws::phi_y_exponential(g, x, y, d) == Approx(std::exp(-g * x / (1.0 + g * y))).epsilon(1e-12));
            }
    REQUIRE(laws::phi_y_exponential(0.0, 1.3, 0.7, 0.5) == Approx(1.0).epsilon(1e-14));
}

TEST_CASE("phi_y against the simulated total mass") {
    // single atom x on the measure scale is a block 2x
    const double alpha = 0.5, d = 0.5, x = 0.5, y = 0.5;
    rng::RngStream s(83, 0);
    const auto beta0 = skewer::IntervalPartition::from_blocks({2.0 * x});
    std::vector<double> mass;
    for (int i = 0; i < 4000; ++i) mass.push_back(0.5 * scaffolding::type1_skewer_run(s, beta0, {y}, alpha, {2e-3, false})[0].total_mass);
    const auto r = verify::mc_laplace_compare(mass, {0.5, 1.0, 2.0}, [&](double g) { return laws::phi_y_exponential(g, x, y, d); }, "phi", "");
    INFO(r.details.dump());
    REQUIRE(r.pass);
}

TEST_CASE("tail of Pi_y") {
    REQUIRE_THROWS_AS(laws::pi_y_tail(0.0, 1.0, 0.5), ParameterError);
    REQUIRE_THROWS_AS(laws::pi_y_tail(-1.0, 1.0, 0.5), ParameterError);
    REQUIRE(laws::pi_y_tail(1e-12, 1.0, 0.5) > 1e5);
    REQUIRE(laws::pi_y_tail(1e-8, 1.0, 0.5) > laws::pi_y_tail(1e-6, 1.0, 0.5));
    for (double d : {0.3, 0.5, 0.7})
        for (double y : {0.5, 1.0, 3.0})
            for (double eps : {0.01, 0.3, 1.0, 5.0}) {
                auto f = [&](double s) { return pi_y_density(s, y, d); };
                boost::math::quadrature::exp_sinh<double> es;
                const double q1 = es.integrate(f, eps, std::numeric_limits<double>::infinity());
                // second rule: Gauss-Kronrod after s = eps + t / (1 - t)
                auto g = [&](double t) { return f(eps + t / (1.0 - t)) / ((1.0 - t) * (1.0 - t)); };
                const double q2 = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(g, 0.0, 1.0, 15, 1e-13);
                REQUIRE(q1 == Approx(q2).epsilon(1e-8));
                REQUIRE(laws::pi_y_tail(eps, y, d) == Approx(q1).epsilon(1e-8));
            }
    // asymptote ((1-d)/Gamma(d)) eps^{d-2} y e^{-eps/y}; relative error about (2-d) y / eps
    for (double y : {0.5, 1.0}) {
        const double d = 0.5, eps = 40.0 * y;
        const double asym = (1.0 - d) / std::tgamma(d) * std::pow(eps, d - 2.0) * y * std::exp(-eps / y);
        REQUIRE(asym == Approx(laws::pi_y_tail(eps, y, d)).epsilon(0.05));
    }
}

TEST_CASE("Poisson-Dirichlet and GEM samplers") {
    rng::RngStream s(84, 0);
    for (double theta : {0.0, 0.5}) {
        const auto pd = laws::sample_pd(s, 0.5, theta, 50);
        REQUIRE(pd.masses.size() == 50);
        double sum = 0.0;
        for (std::size_t i = 0; i < pd.masses.size(); ++i) {
            REQUIRE(pd.masses[i] > 0.0);
            if (i > 0) REQUIRE(pd.masses[i] <= pd.masses[i - 1]);
            sum += pd.masses[i];
        }
        REQUIRE(sum < 1.0);
        REQUIRE(sum + pd.residual == Approx(1.0).epsilon(1e-12));
    }
    verify::MomentSummary first;
    for (int i = 0; i < 1'000'000; ++i) first.add(laws::sample_gem(s, 0.5, 0.0, 1)[0]);
    REQUIRE(std::fabs(first.z(0.5)) < 4.0);

    // PD(alpha, 0) largest fraction from ranked stable-subordinator jumps Gamma_i^{-1/alpha}
    const double alpha = 0.5;
    std::vector<double> oracle, sampled, sampled_aa;
    for (int i = 0; i < 20000; ++i) {
        double g = 0.0, sum = 0.0, top = 0.0;
        const int n = 5000;
        for (int k = 0; k < n; ++k) {
            g += s.exponential();
            const double j = std::pow(g, -1.0 / alpha);
            if (k == 0) top = j;
            sum += j;
        }
        sum += alpha / (1.0 - alpha) * std::pow(g, 1.0 - 1.0 / alpha);  // mean of the remaining jumps
        oracle.push_back(top / sum);
        sampled.push_back(laws::sample_pd(s, alpha, 0.0, 1).masses[0]);
        sampled_aa.push_back(laws::sample_pd(s, alpha, alpha, 1).masses[0]);
    }
    REQUIRE(verify::ks_two_sample(oracle, sampled).p_value > 0.01);
    REQUIRE(verify::ks_two_sample(sampled, sampled_aa).p_value < 0.01);
    REQUIRE_THROWS_AS(laws::sample_pd(s, 0.5, 0.0, 0), ParameterError);
    REQUIRE_THROWS_AS(laws::sample_pd(s, 0.5, -0.6, 3), ParameterError);
}

TEST_CASE("stable-jump PD(alpha, 0) sampler against stick-breaking") {
    auto s = rng::RngStream(77, 3);
    const double alpha = 0.5;
    std::vector<double> first, second, gem_first, gem_second;
    for (int i = 0; i < 3000; ++i) {
        const auto a = laws::sample_pd_stable(s, alpha, 200);
        const auto b = laws::sample_pd(s, alpha, 0.0, 2);
        first.push_back(a.masses[0]);
        second.push_back(a.masses[1]);
        gem_first.push_back(b.masses[0]);
        gem_second.push_back(b.masses[1]);
        REQUIRE(a.masses[0] >= a.masses[1]);
        REQUIRE(a.residual < 0.05);
    }
    CHECK(verify::ks_two_sample(first, gem_first).p_value > 0.01);
    CHECK(verify::ks_two_sample(second, gem_second).p_value > 0.01);
    REQUIRE_THROWS_AS(laws::sample_pd_stable(s, 0.5, 0), ParameterError);
}

TEST_CASE("pseudo-stationary reference") {
    const double alpha = 0.5, rho = 1.0;
    rng::RngStream s(85, 0);
    verify::MomentSummary total0, extinct;
    std::vector<double> frac_a, frac_b;
    const double y = 0.5;
    for (int i = 0; i < 20000; ++i) {
        const auto r0 = laws::pseudo_stationary_reference(s, alpha, rho, 0.0, 1);
        total0.add(0.5 * r0.q0);
        const auto ry = laws::pseudo_stationary_reference(s, alpha, rho, y, 1);
        extinct.add(ry.q == 0.0 ? 1.0 : 0.0);
        if (ry.q > 0.0) frac_a.push_back(ry.masses[0] / (0.5 * ry.q));
        frac_b.push_back(r0.masses[0] / (0.5 * r0.q0));
    }
    REQUIRE(std::fabs(total0.z(1.0 / rho)) < 4.0);
    REQUIRE(std::fabs(extinct.z(rho * y / (rho * y + 1.0))) < 4.0);
    REQUIRE(verify::ks_two_sample(frac_a, frac_b).p_value > 0.01);
}

TEST_CASE("de-Poissonizing time change") {
    std::vector<double> lv, lam;
    for (int i = 0; i <= 100; ++i) {
        lv.push_back(0.01 * i);
        lam.push_back(2.5);
    }
    REQUIRE(laws::rho_time_change(lv, lam, 0.0) == 0.0);
    REQUIRE(laws::rho_time_change(lv, lam, 0.2) == Approx(0.5).epsilon(1e-12));
    std::vector<double> lam2;
    for (double y : lv) lam2.push_back(1.0 + y);
    double prev = -1.0;
    for (double u = 0.01; u < 0.69; u += 0.01) {
        const double r = laws::rho_time_change(lv, lam2, u);
        REQUIRE(r > prev);
        REQUIRE(r == Approx(std::exp(u) - 1.0).epsilon(1e-3));  // int dz/(1+z) = log(1+y)
        prev = r;
    }
    REQUIRE_THROWS_AS(laws::rho_time_change(lv, lam, 1.0), HorizonExhausted);
    lam2[50] = 0.0;
    REQUIRE_THROWS_AS(laws::rho_time_change(lv, lam2, 0.6), HorizonExhausted);
}

TEST_CASE("law registry") {
    const auto reg = laws::registry(0.5);
    REQUIRE(reg.size() >= 7);
    for (const auto& l : reg) {
        const auto j = laws::to_json(l);
        REQUIRE(j["name"] == l.name);
        REQUIRE(!l.anchor.empty());
        if (l.kind == laws::EvaluatorKind::laplace_transform) REQUIRE(l.evaluate(0.0) <= 1.0 + 1e-12);
        if (l.name == "lt_leftmost_semigroup") REQUIRE(l.evaluate(0.0) == Approx(1.0).epsilon(1e-12));
    }
}
