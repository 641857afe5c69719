#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>
#include <json.hpp>

#include "ipd/besq.hpp"
#include "ipd/error.hpp"
#include "ipd/rng.hpp"

// Closed-form reference laws and the PD samplers.
namespace ipd::laws {

namespace detail {

inline void check_d(double d) { ipd::check::require_unit_open(d, "d"); }

}  // namespace detail

/// E_x exp(-gamma R~(y)) for the leftmost process R~ started at x:
/// exp(-x/2y) ((1 + 2 gamma y)^{1-d} exp(x / (2y + 4 gamma y^2)) - (2 gamma y)^{1-d}).
inline double lt_leftmost_semigroup(double x, double y, double gamma, double d) {
    ipd::check::require_nonnegative(x, "x");
    ipd::check::require_positive(y, "y");
    ipd::check::require_nonnegative(gamma, "gamma");
    detail::check_d(d);
    const double a = 1.0 - d;
    const double g = 2.0 * gamma * y;
    // combine the exponentials first: exp(-x/2y + x/(2y(1+g))) = exp(-x g / (2y (1+g)))
    const double v = std::pow(1.0 + g, a) * std::exp(-x * g / (2.0 * y * (1.0 + g))) -
                     std::pow(g, a) * std::exp(-x / (2.0 * y));
    return std::clamp(v, 0.0, 1.0);
}

/// int e^{-gamma a} p_y(x, da) = (1 + gamma y)^{1-d} (exp(-gamma x / (1 + gamma y)) - exp(-x/y)).
/// Masses are on the measure scale (half the block lengths).
inline double lt_kernel_p_y(double x, double y, double gamma, double d) {
    ipd::check::require_positive(x, "x");
    ipd::check::require_positive(y, "y");
    ipd::check::require_nonnegative(gamma, "gamma");
    detail::check_d(d);
    const double v = std::pow(1.0 + gamma * y, 1.0 - d) * (std::exp(-gamma * x / (1.0 + gamma * y)) - std::exp(-x / y));
    return std::max(v, 0.0);
}

/// Laplace transform of the leftmost block at level y of a clade from block b, given survival:
/// (1 + gamma/r)^alpha (e^{b r^2/(r+gamma)} - 1) / (e^{b r} - 1), r = 1/2y.
inline double lt_type1_leftmost(double b, double y, double gamma, double alpha) {
    ipd::check::require_positive(b, "b");
    ipd::check::require_positive(y, "y");
    ipd::check::require_nonnegative(gamma, "gamma");
    ipd::check::require_unit_open(alpha, "alpha");
    const double r = 0.5 / y;
    // ratio of expm1 terms, rescaled by e^{-b r} against overflow
    const double num = std::expm1(b * r * r / (r + gamma));
    const double den = std::expm1(b * r);
    if (std::isinf(den)) {
        const double log_ratio = b * r * r / (r + gamma) - b * r;
        return std::pow(1.0 + gamma / r, alpha) * std::exp(log_ratio);
    }
    return std::pow(1.0 + gamma / r, alpha) * num / den;
}

/// y^{1-d} int (1 - e^{-gamma s}) Pi_y(ds) = (1 + gamma y)^{1-d} - 1 via the Gamma integral
/// int s^{d-2} (e^{-a s} - e^{-b s}) ds = Gamma(d-1) (a^{1-d} - b^{1-d}).
inline double phi_y_denominator(double gamma, double y, double d) {
    ipd::check::require_nonnegative(gamma, "gamma");
    ipd::check::require_positive(y, "y");
    detail::check_d(d);
    const double c = (1.0 - d) / std::tgamma(d);
    const double integral = c * std::tgamma(d - 1.0) * (std::pow(1.0 / y, 1.0 - d) - std::pow(gamma + 1.0 / y, 1.0 - d));
    return 1.0 + std::pow(y, 1.0 - d) * integral;
}

/// phi_y(x) for phi(a) = e^{-gamma a}: e^{-x/y} + (int phi dp_y(x, .)) / denominator.
inline double phi_y_exponential(double gamma, double x, double y, double d) {
    ipd::check::require_nonnegative(x, "x");
    const double den = phi_y_denominator(gamma, y, d);
    if (!std::isfinite(den)) throw ResolutionError("phi_y denominator overflow");
    const double kern = x > 0.0 ? lt_kernel_p_y(x, y, gamma, d) : 0.0;
    return std::exp(-x / y) + kern / den;
}

/// Pi_y((eps, inf)) for Pi_y(ds) = ((1-d)/Gamma(d)) s^{d-2} e^{-s/y} ds.
inline double pi_y_tail(double eps, double y, double d) {
    if (!(eps > 0.0)) throw ParameterError("Pi_y has infinite mass near 0; eps must be positive");
    ipd::check::require_finite(eps, "eps");
    ipd::check::require_positive(y, "y");
    detail::check_d(d);
    // Gamma(d-1, x) = (Gamma(d, x) - x^{d-1} e^{-x}) / (d-1)
    const double x = eps / y;
    const double upper = (boost::math::tgamma(d, x) - std::pow(x, d - 1.0) * std::exp(-x)) / (d - 1.0);
    return (1.0 - d) / std::tgamma(d) * std::pow(y, d - 1.0) * upper;
}

/// First n pieces of GEM(alpha, theta): V_i ~ Beta(1 - alpha, theta + i alpha), P_i = V_i prod_{j<i} (1 - V_j).
inline std::vector<double> sample_gem(rng::RngStream& s, double alpha, double theta, std::size_t n) {
    ipd::check::require_unit_open(alpha, "alpha");
    if (!(theta > -alpha)) throw ParameterError("theta must exceed -alpha");
    std::vector<double> p;
    p.reserve(n);
    double rest = 1.0;
    for (std::size_t i = 1; i <= n; ++i) {
        const double v = rng::sample_beta(s, 1.0 - alpha, theta + static_cast<double>(i) * alpha);
        p.push_back(rest * v);
        rest *= 1.0 - v;
    }
    return p;
}

struct PdSample {
    std::vector<double> masses;  // decreasing
    double residual = 0.0;       // mass outside the returned k
    std::size_t sticks = 0;
};

/// First k ranked masses of PD(alpha, theta) from GEM(alpha, theta) stick-breaking.
/// Breaking stops once the unbroken stick is below the k-th largest piece, so the ranking is exact.
inline PdSample sample_pd(rng::RngStream& s, double alpha, double theta, std::size_t k,
                          std::size_t max_sticks = 10'000'000) {
    ipd::check::require_unit_open(alpha, "alpha");
    ipd::check::require_finite(theta, "theta");
    if (!(theta > -alpha)) throw ParameterError("theta must exceed -alpha");
    if (k < 1) throw ParameterError("PD truncation must be at least 1");
    double rest = 1.0;
    std::size_t i = 0;
    // min-heap of the k largest pieces
    std::vector<double> top;
    auto cmp = std::greater<>();
    while (i < max_sticks) {
        ++i;
        const double v = rng::sample_beta(s, 1.0 - alpha, theta + static_cast<double>(i) * alpha);
        const double p = rest * v;
        rest -= p;
        if (top.size() < k) {
            top.push_back(p);
            std::push_heap(top.begin(), top.end(), cmp);
        } else if (p > top.front()) {
            std::pop_heap(top.begin(), top.end(), cmp);
            top.back() = p;
            std::push_heap(top.begin(), top.end(), cmp);
        }
        if (top.size() == k && rest < top.front()) break;
        if (rest <= 0.0) break;
    }
    PdSample out;
    out.sticks = i;
    std::sort(top.begin(), top.end(), std::greater<>());
    out.masses = std::move(top);
    double sum = 0.0;
    for (double m : out.masses) sum += m;
    out.residual = std::max(0.0, 1.0 - sum);
    return out;
}

/// First k ranked masses of PD(alpha, 0) as normalized ranked jumps Gamma_i^{-1/alpha} of a stable
/// subordinator; the jumps beyond k enter the normalization through their conditional mean.
inline PdSample sample_pd_stable(rng::RngStream& s, double alpha, std::size_t k) {
    ipd::check::require_unit_open(alpha, "alpha");
    if (k < 1) throw ParameterError("PD truncation must be at least 1");
    std::vector<double> j(k);
    double g = 0.0, sum = 0.0;
    for (auto& v : j) {
        g += s.exponential();
        v = std::pow(g, -1.0 / alpha);
        sum += v;
    }
    // E sum_{i>k} Gamma_i^{-1/alpha} given Gamma_k = g: int_g^inf t^{-1/alpha} dt
    const double tail = alpha / (1.0 - alpha) * std::pow(g, 1.0 - 1.0 / alpha);
    const double total = sum + tail;
    PdSample out;
    out.masses.reserve(k);
    for (double v : j) out.masses.push_back(v / total);
    out.residual = tail / total;
    out.sticks = k;
    return out;
}

struct PseudoStationarySample {
    double q0 = 0.0, q = 0.0;    // BESQ(0) total at level 0 and at y
    std::vector<double> masses;  // x_i Q(y) / 2, decreasing
};

/// sum_i delta_{x_i Q(y)/2}, (x_i) ~ PD(alpha, 0), Q ~ BESQ(0) from Exp(rate rho/2).
inline PseudoStationarySample pseudo_stationary_reference(rng::RngStream& s, double alpha, double rho, double y,
                                                          std::size_t k) {
    ipd::check::require_positive(rho, "rho");
    ipd::check::require_nonnegative(y, "y");
    PseudoStationarySample out;
    out.q0 = s.exponential() / (0.5 * rho);
    out.q = y > 0.0 ? besq::besq_transition(s, out.q0, 0.0, y) : out.q0;
    const auto pd = sample_pd(s, alpha, 0.0, k);
    out.masses.reserve(pd.masses.size());
    for (double x : pd.masses) out.masses.push_back(0.5 * x * out.q);
    return out;
}

/// rho(u) = inf{y : int_0^y dz / lambda(z) > u} for lambda given on an increasing level grid
/// (trapezoid in 1/lambda, linear inversion within the crossing cell).
inline double rho_time_change(const std::vector<double>& levels, const std::vector<double>& lambda, double u) {
    if (levels.size() != lambda.size() || levels.size() < 2) throw GridError("level grid too short");
    ipd::check::require_nonnegative(u, "u");
    if (u == 0.0) return levels.front();
    double acc = 0.0;
    for (std::size_t i = 1; i < levels.size(); ++i) {
        if (!(lambda[i - 1] > 0.0) || !(lambda[i] > 0.0))
            throw HorizonExhausted("total mass hits 0 before the clock reaches u");
        const double h = levels[i] - levels[i - 1];
        const double piece = 0.5 * h * (1.0 / lambda[i - 1] + 1.0 / lambda[i]);
        if (acc + piece > u) return levels[i - 1] + h * (u - acc) / piece;
        acc += piece;
    }
    throw HorizonExhausted("level grid ends before the clock reaches u");
}

enum class EvaluatorKind { laplace_transform, tail_rate, density, sampler };

inline const char* to_string(EvaluatorKind k) {
    switch (k) {
        case EvaluatorKind::laplace_transform: return "laplace_transform";
        case EvaluatorKind::tail_rate: return "tail_rate";
        case EvaluatorKind::density: return "density";
        case EvaluatorKind::sampler: return "sampler";
    }
    return "unknown";
}

struct LawSpec {
    std::string name;
    std::map<std::string, double> params;
    EvaluatorKind kind = EvaluatorKind::laplace_transform;
    std::string anchor;
    std::function<double(double)> evaluate;  // in gamma, eps or x depending on kind; empty for samplers
};

inline nlohmann::json to_json(const LawSpec& l) {
    return {{"name", l.name}, {"params", l.params}, {"kind", to_string(l.kind)}, {"anchor", l.anchor}};
}

/// Registry of reference laws at the given parameters.
inline std::vector<LawSpec> registry(double alpha, double x = 1.0, double y = 1.0, double b = 1.0) {
    const double d = 1.0 - alpha;
    std::vector<LawSpec> r;
    r.push_back({"lt_leftmost_semigroup", {{"x", x}, {"y", y}, {"d", d}}, EvaluatorKind::laplace_transform,
                 "Laplace transform of the leftmost process semigroup",
                 [=](double g) { return lt_leftmost_semigroup(x, y, g, d); }});
    r.push_back({"lt_kernel_p_y", {{"x", x}, {"y", y}, {"d", d}}, EvaluatorKind::laplace_transform,
                 "leftmost-descendant kernel p_y of the measure-valued diffusion",
                 [=](double g) { return lt_kernel_p_y(x, y, g, d); }});
    r.push_back({"lt_type1_leftmost", {{"b", b}, {"y", y}, {"alpha", alpha}}, EvaluatorKind::laplace_transform,
                 "leftmost surviving block of a clade, given survival",
                 [=](double g) { return lt_type1_leftmost(b, y, g, alpha); }});
    r.push_back({"phi_y_exponential", {{"x", x}, {"y", y}, {"d", d}}, EvaluatorKind::laplace_transform,
                 "branching-kernel image of an exponential test function",
                 [=](double g) { return phi_y_exponential(g, x, y, d); }});
    r.push_back({"pi_y_tail", {{"y", y}, {"d", d}}, EvaluatorKind::tail_rate,
                 "tail of the subordinator Levy measure ((1-d)/Gamma(d)) s^{d-2} e^{-s/y} ds",
                 [=](double eps) { return pi_y_tail(eps, y, d); }});
    r.push_back({"sample_pd", {{"alpha", alpha}, {"theta", 0.0}}, EvaluatorKind::sampler,
                 "Poisson-Dirichlet ranked masses by stick-breaking", {}});
    r.push_back({"pseudo_stationary_reference", {{"alpha", alpha}, {"rho", 1.0}}, EvaluatorKind::sampler,
                 "PD(alpha,0) masses scaled by a BESQ(0) total from an exponential start", {}});
    return r;
}

}  // namespace ipd::laws
