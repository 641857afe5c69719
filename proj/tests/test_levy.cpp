#include <catch_amalgamated.hpp>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <limits>
#include <vector>

#include "ipd/levy.hpp"
#include "ipd/scaffolding.hpp"
#include "ipd/verify.hpp"

using namespace ipd;
using namespace ipd::scaffolding;
using Catch::Approx;

namespace {

// e^{-x} - 1 + x without cancellation
double compensated_exp(double x) {
    if (x < 1e-3) return x * x / 2.0 - x * x * x / 6.0 + x * x * x * x / 24.0;
    return std::expm1(-x) + x;
}

// zero at the endpoints, where the integrands are 0 * inf
template <class F>
auto guarded(F f) {
    return [f](double z) {
        if (!(z > 0.0) || !std::isfinite(z)) return 0.0;
        const double v = f(z);
        return std::isfinite(v) ? v : 0.0;
    };
}

double psi_by_quadrature(double c, double alpha) {
    boost::math::quadrature::exp_sinh<double> q;
    return q.integrate(guarded([&](double z) { return compensated_exp(c * z) * levy_jump_rate(z, alpha); }), 1e-12);
}

}  // namespace

TEST_CASE("Laplace exponent equals the compensated jump integral") {
    for (double alpha : {0.3, 0.5, 0.7})
        for (double c : {0.5, 1.0, 2.0}) {
            INFO("alpha " << alpha << " c " << c);
            REQUIRE(psi_by_quadrature(c, alpha) == Approx(laplace_exponent(c, alpha)).epsilon(1e-6));
        }
    REQUIRE(laplace_exponent(1.0, 0.5) == Approx(0.7978845608).epsilon(1e-9));
}

TEST_CASE("tail and scale function") {
    boost::math::quadrature::exp_sinh<double> q;
    for (double alpha : {0.3, 0.5, 0.7}) {
        for (double y : {0.01, 1.0, 5.0}) {
            const double tail = q.integrate([&](double t) { return levy_jump_rate(y + t, alpha); }, 1e-12);
            REQUIRE(tail == Approx(levy_tail(y, alpha)).epsilon(1e-8));
        }
        // int e^{-cx} W(x) dx = 1 / psi(c)
        for (double c : {0.5, 2.0}) {
            const double lt = q.integrate([&](double x) { return std::exp(-c * x) * scale_function(x, alpha); }, 1e-12);
            REQUIRE(lt == Approx(1.0 / laplace_exponent(c, alpha)).epsilon(1e-8));
        }
        // slope of log tail is -(1 + alpha)
        const double slope = std::log(levy_tail(10.0, alpha) / levy_tail(1.0, alpha)) / std::log(10.0);
        REQUIRE(slope == Approx(-1.0 - alpha).epsilon(1e-12));
    }
    REQUIRE(scale_function(0.0, 0.5) == 0.0);
    REQUIRE(scale_function(-1.0, 0.5) == 0.0);
    REQUIRE_THROWS_AS(levy_jump_rate(0.0, 0.5), ParameterError);
    REQUIRE_THROWS_AS(levy_jump_rate(1.0, 1.0), ParameterError);
}

TEST_CASE("drift compensation and missing mass") {
    boost::math::quadrature::exp_sinh<double> q;
    boost::math::quadrature::tanh_sinh<double> t;
    const double alpha = 0.5, eps = 1e-3;
    const double m = q.integrate([&](double z) { return z * levy_jump_rate(eps + z, alpha); }, 1e-12) +
                     eps * levy_tail(eps, alpha);
    REQUIRE(compensating_drift(eps, alpha) == Approx(m).epsilon(1e-8));
    // a bridge over [0,z] has mean width (4+2a) u (z-u) / z at height u; integrate du over (0,z), then Pi(dz)
    const double mm = t.integrate(
        guarded([&](double z) { return (4.0 + 2.0 * alpha) * z * z / 6.0 * levy_jump_rate(z, alpha); }), 0.0, eps);
    REQUIRE(missing_mass_rate(eps, alpha) == Approx(mm).epsilon(1e-6));
}

TEST_CASE("first passage downward") {
    const double alpha = 0.5;
    rng::RngStream s(31, 0);
    SECTION("Laplace transform exp(-u Phi(q))") {
        const double u = 0.7;
        std::vector<double> T;
        for (int i = 0; i < 100000; ++i) T.push_back(sample_first_passage_time_down(s, u, alpha));
        const double kappa = std::pow(2.0, alpha) * std::tgamma(1.0 + alpha);
        auto ref = [&](double q) { return std::exp(-u * std::pow(kappa * q, 1.0 / (1.0 + alpha))); };
        const auto r = verify::mc_laplace_compare(T, {0.5, 1.0, 2.0, 5.0}, ref, "passage_down", "down passage");
        REQUIRE(r.pass);
    }
    SECTION("agrees with the truncated walker") {
        const double eps = 1e-3, horizon = 4.0;
        std::vector<double> exact, walker;
        auto noop_j = [](double, double, double) {};
        auto noop_d = [](double, double) {};
        for (int i = 0; i < 1000; ++i) {
            exact.push_back(std::min(horizon, sample_first_passage_time_down(s, 1.0, alpha)));
            TruncatedWalker w(s, alpha, eps, 1.0);
            const bool hit = w.run(0.0, kNoCap, horizon, noop_j, noop_d);
            walker.push_back(hit ? std::min(horizon, w.time()) : horizon);
        }
        const auto ks = verify::ks_two_sample(exact, walker);
        INFO("KS D " << ks.statistic);
        REQUIRE(ks.p_value > 0.001);
    }
    REQUIRE(sample_first_passage_time_down(s, 0.0, alpha) == 0.0);
}

TEST_CASE("first passage upward: overshoot law") {
    rng::RngStream s(32, 0);
    for (double alpha : {0.3, 0.5, 0.7}) {
        std::vector<double> over, under;
        const double dist = 2.0;
        for (int i = 0; i < 40000; ++i) {
            const auto o = sample_first_passage_up(s, dist, alpha);
            REQUIRE(o.jump > o.undershoot);
            over.push_back((o.jump - o.undershoot) / dist);
            under.push_back(o.undershoot / dist);
        }
        // overshoot / distance = V / (1 - V), V ~ Beta(1 - alpha, alpha)
        const auto ks = verify::ks_one_sample(over, [&](double h) {
            return h <= 0.0 ? 0.0 : boost::math::ibeta(1.0 - alpha, alpha, h / (1.0 + h));
        });
        INFO("alpha " << alpha << " KS D " << ks.statistic);
        REQUIRE(ks.p_value > 0.001);
        // undershoot density prop. to [1 - (1 - r)_+^alpha] r^{-1-alpha}, normalized to 1 by the scale function
        boost::math::quadrature::tanh_sinh<double> t;
        auto cdf = [&](double r) {
            if (r <= 0.0) return 0.0;
            const double K = levy_constant(alpha) / (1.0 + alpha);
            const double w = std::pow(2.0, alpha) * K;
            auto dens = [&](double x) { return w * (1.0 - std::pow(std::max(0.0, 1.0 - x), alpha)) * std::pow(x, -1.0 - alpha); };
            if (r <= 1.0) return t.integrate(guarded(dens), 0.0, r);
            return t.integrate(guarded(dens), 0.0, 1.0) + w * (1.0 - std::pow(r, -alpha)) / alpha;
        };
        under.resize(3000);
        const auto ks2 = verify::ks_one_sample(under, cdf);
        REQUIRE(ks2.p_value > 0.001);
    }
}

TEST_CASE("central jumps and sup rate against a brute-force walker") {
    const double alpha = 0.5, eps = 1e-3, z0 = 0.05, y = 0.3;
    rng::RngStream s(33, 0);
    double downcross = 0.0, central = 0.0, high = 0.0, max_since = 0.0;
    std::vector<double> ratio;
    for (int rep = 0; rep < 20; ++rep) {
        TruncatedWalker w(s, alpha, eps, 0.0);
        max_since = 0.0;
        auto on_jump = [&](double, double pre, double z) {
            if (pre < 0.0 && pre + z > 0.0 && z > z0) {
                central += 1.0;
                ratio.push_back(-pre / z);
            }
            max_since = std::max(max_since, pre + z);
        };
        auto on_drift = [&](double from, double to) {
            if (from > 0.0 && to <= 0.0) {
                downcross += 1.0;
                if (max_since > y) high += 1.0;
                max_since = 0.0;
            }
        };
        w.run(-std::numeric_limits<double>::infinity(), kNoCap, 5.0, on_jump, on_drift);
    }
    const double L = downcross / compensating_drift(eps, alpha);
    const double expect_central = central_jump_rate(z0, alpha) * L;
    const double expect_high = biclade_sup_rate(y, alpha) * L;
    INFO("central " << central << " vs " << expect_central << "; high " << high << " vs " << expect_high);
    REQUIRE(std::fabs(central - expect_central) < 4.0 * std::sqrt(expect_central) + 0.03 * expect_central);
    REQUIRE(std::fabs(high - expect_high) < 4.0 * std::sqrt(expect_high) + 0.03 * expect_high);
    // undershoot uniform given z
    REQUIRE(verify::ks_one_sample(ratio, [](double u) { return std::clamp(u, 0.0, 1.0); }).p_value > 0.001);

    std::vector<double> zs;
    for (int i = 0; i < 50000; ++i) {
        const auto c = sample_central_jump(s, z0, alpha);
        REQUIRE(c.undershoot > 0.0);
        REQUIRE(c.undershoot < c.jump);
        zs.push_back(c.jump);
    }
    REQUIRE(verify::ks_one_sample(zs, [&](double z) { return z <= z0 ? 0.0 : 1.0 - std::pow(z0 / z, alpha); }).p_value >
            0.001);
}

TEST_CASE("crossing value intensity") {
    const double d = 0.4, xmin = 0.01;
    // rate of x > xmin equals int (1-d)/Gamma(d) x^{d-2}
    boost::math::quadrature::exp_sinh<double> q;
    const double rate = q.integrate([&](double t) { return (1.0 - d) / std::tgamma(d) * std::pow(xmin + t, d - 2.0); });
    REQUIRE(crossing_value_rate(xmin, d) == Approx(rate).epsilon(1e-8));
    rng::RngStream s(34, 0);
    std::vector<double> xs;
    for (int i = 0; i < 20000; ++i) xs.push_back(sample_crossing_value(s, xmin, d));
    REQUIRE(verify::ks_one_sample(xs, [&](double x) { return x <= xmin ? 0.0 : 1.0 - std::pow(xmin / x, 1.0 - d); })
                .p_value > 0.001);
}
