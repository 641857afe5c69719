#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "ipd/error.hpp"
#include "ipd/report.hpp"
#include "ipd/rng.hpp"

namespace ipd::verify {

/// Kolmogorov limiting tail P(K > lambda).
inline double kolmogorov_q(double lambda) {
    if (lambda < 0.2) return 1.0;
    double sum = 0.0, sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += sign * term;
        if (term < 1e-16) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t n_a = 0, n_b = 0;
};

inline double ks_pvalue(double D, double n_eff) {
    const double sq = std::sqrt(n_eff);
    return kolmogorov_q((sq + 0.12 + 0.11 / sq) * D);
}

inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b, std::size_t min_size = 50) {
    if (a.size() < min_size || b.size() < min_size) throw ParameterError("KS samples too small");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double D = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == x) ++i;
        while (j < b.size() && b[j] == x) ++j;
        D = std::max(D, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return {D, ks_pvalue(D, na * nb / (na + nb)), a.size(), b.size()};
}

inline KsResult ks_one_sample(std::vector<double> a, const std::function<double(double)>& cdf) {
    if (a.size() < 10) throw ParameterError("KS sample too small");
    std::sort(a.begin(), a.end());
    const double n = static_cast<double>(a.size());
    double D = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double F = cdf(a[i]);
        D = std::max({D, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
    }
    return {D, ks_pvalue(D, n), a.size(), 0};
}

/// Running mean and second central moment; mergeable.
struct MomentSummary {
    double n = 0.0, mean = 0.0, m2 = 0.0;

    void add(double x) {
        n += 1.0;
        const double d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }
    void merge(const MomentSummary& o) {
        if (o.n == 0.0) return;
        const double tot = n + o.n;
        const double d = o.mean - mean;
        mean += d * o.n / tot;
        m2 += o.m2 + d * d * n * o.n / tot;
        n = tot;
    }
    double variance() const { return n > 1.0 ? m2 / (n - 1.0) : 0.0; }
    double se() const { return n > 1.0 ? std::sqrt(variance() / n) : std::numeric_limits<double>::infinity(); }
    double z(double target) const {
        const double e = se();
        return e > 0.0 ? (mean - target) / e : (mean == target ? 0.0 : std::numeric_limits<double>::infinity());
    }
};

inline MomentSummary summarize(const std::vector<double>& xs) {
    MomentSummary m;
    for (double x : xs) m.add(x);
    return m;
}

/// Folds indexed summaries in index order, so the result does not depend on arrival order.
template <class Summary>
Summary fold_by_index(std::vector<std::pair<std::size_t, Summary>> parts) {
    std::sort(parts.begin(), parts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    Summary acc{};
    for (const auto& p : parts) acc.merge(p.second);
    return acc;
}

/// Standard error of the sample variance (normal-free: uses the fourth central moment).
inline double variance_se(const std::vector<double>& xs) {
    const double n = static_cast<double>(xs.size());
    const auto m = summarize(xs);
    double m4 = 0.0;
    for (double x : xs) m4 += std::pow(x - m.mean, 4);
    m4 /= n;
    const double v = m.variance();
    return std::sqrt(std::max(0.0, (m4 - v * v * (n - 3.0) / (n - 1.0)) / n));
}

struct HillResult {
    double index = 0.0;
    double ci_low = 0.0, ci_high = 0.0;
    std::size_t k = 0, n = 0;
    std::vector<std::pair<double, double>> sweep;  // (top fraction, index)
    bool heavy_tailed = true;
};

namespace detail {

inline double hill_sorted_desc(const std::vector<double>& desc, std::size_t k) {
    const double ref = std::log(desc[k]);
    double h = 0.0;
    for (std::size_t i = 0; i < k; ++i) h += std::log(desc[i]) - ref;
    return static_cast<double>(k) / h;
}

inline double hill_of(std::vector<double> xs, std::size_t k) {
    std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(k), xs.end(), std::greater<>());
    std::sort(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(k), std::greater<>());
    return hill_sorted_desc(xs, k);
}

}  // namespace detail

/// Hill estimate of the tail index over the top fraction, percentile bootstrap CI,
/// and a sweep over {0.5%, 1%, 2%}. A spread above 20% across the sweep flags a non-power tail.
inline HillResult hill_tail_index(const std::vector<double>& sample, double top_fraction, rng::RngStream* boot = nullptr,
                                  std::size_t n_boot = 200) {
    std::vector<double> xs;
    xs.reserve(sample.size());
    for (double x : sample)
        if (x > 0.0 && std::isfinite(x)) xs.push_back(x);
    const std::size_t n = xs.size();
    const auto k = static_cast<std::size_t>(std::floor(top_fraction * static_cast<double>(n)));
    if (k < 10 || k >= n) throw ParameterError("insufficient tail points for Hill estimation");
    HillResult r;
    r.n = n;
    r.k = k;
    r.index = detail::hill_of(xs, k);
    for (double f : {0.005, 0.01, 0.02}) {
        const auto kk = static_cast<std::size_t>(std::floor(f * static_cast<double>(n)));
        if (kk >= 10 && kk < n) r.sweep.emplace_back(f, detail::hill_of(xs, kk));
    }
    if (r.sweep.size() >= 2) {
        double lo = r.sweep.front().second, hi = lo, sum = 0.0;
        for (const auto& p : r.sweep) {
            lo = std::min(lo, p.second);
            hi = std::max(hi, p.second);
            sum += p.second;
        }
        r.heavy_tailed = (hi - lo) / (sum / static_cast<double>(r.sweep.size())) < 0.2;
    }
    r.ci_low = r.ci_high = r.index;
    if (boot != nullptr && n_boot > 0) {
        std::vector<double> est;
        est.reserve(n_boot);
        std::vector<double> re(n);
        for (std::size_t b = 0; b < n_boot; ++b) {
            for (auto& v : re) v = xs[static_cast<std::size_t>(boot->uniform() * static_cast<double>(n)) % n];
            est.push_back(detail::hill_of(re, k));
        }
        std::sort(est.begin(), est.end());
        r.ci_low = est[static_cast<std::size_t>(0.025 * static_cast<double>(n_boot))];
        r.ci_high = est[std::min(n_boot - 1, static_cast<std::size_t>(0.975 * static_cast<double>(n_boot)))];
    }
    return r;
}

/// z-scores of the empirical Laplace transform against a reference, pass iff all |z| <= limit.
inline TestReport mc_laplace_compare(const std::vector<double>& sample, const std::vector<double>& gammas,
                                     const std::function<double(double)>& reference, std::string name,
                                     std::string anchor, double limit = 4.0) {
    if (sample.size() < 2) throw ParameterError("degenerate sample");
    Stopwatch sw;
    TestReport r;
    r.name = std::move(name);
    r.anchor = std::move(anchor);
    r.sample_sizes = {sample.size()};
    r.tolerance = "|z| <= " + std::to_string(limit);
    double worst = 0.0;
    auto rows = nlohmann::json::array();
    for (double g : gammas) {
        MomentSummary m;
        for (double x : sample) m.add(std::exp(-g * x));
        const double ref = reference(g);
        const double z = (g == 0.0) ? 0.0 : m.z(ref);
        if (std::fabs(z) >= std::fabs(worst) || !std::isfinite(z)) worst = z;
        rows.push_back({{"gamma", g}, {"empirical", m.mean}, {"reference", ref}, {"se", m.se()}, {"z", num(z)}});
    }
    r.z_score = worst;
    r.statistic = worst;
    r.pass = std::isfinite(worst) && std::fabs(worst) <= limit;
    r.details["rows"] = rows;
    r.runtime_seconds = sw.seconds();
    return r;
}

struct RateCount {
    double level = 0.0;
    double count = 0.0;
    double exposure = 1.0;
};

struct PowerFit {
    double amplitude = 0.0, slope = 0.0;
    double se_log_amplitude = 0.0, se_slope = 0.0;
};

/// Weighted least squares of log(count/exposure) on log(level), weights = counts.
inline PowerFit fit_power_law(const std::vector<RateCount>& c) {
    if (c.size() < 3) throw ParameterError("rate fit needs at least three thresholds");
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& r : c) {
        if (!(r.count > 0.0)) throw ParameterError("zero count in rate fit");
        const double w = r.count, x = std::log(r.level), y = std::log(r.count / r.exposure);
        sw += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        sxy += w * x * y;
    }
    const double det = sw * sxx - sx * sx;
    PowerFit f;
    f.slope = (sw * sxy - sx * sy) / det;
    const double a = (sxx * sy - sx * sxy) / det;
    f.amplitude = std::exp(a);
    f.se_slope = std::sqrt(sw / det);
    f.se_log_amplitude = std::sqrt(sxx / det);
    return f;
}

/// Fitted power law of counts against an expected rate function y -> rate.
inline TestReport rate_ratio_test(const std::vector<RateCount>& counts, const std::function<double(double)>& expected,
                                  double slope_tol = 0.05, double amplitude_rel_tol = 0.10,
                                  std::string name = "rate_ratio", std::string anchor = "") {
    Stopwatch sw;
    const auto fit = fit_power_law(counts);
    std::vector<RateCount> ref;
    for (const auto& r : counts) ref.push_back({r.level, expected(r.level), 1.0});
    const auto rfit = fit_power_law(ref);
    TestReport t;
    t.name = std::move(name);
    t.anchor = std::move(anchor);
    double total = 0.0;
    for (const auto& r : counts) total += r.count;
    t.sample_sizes = {static_cast<std::size_t>(total)};
    const double ratio = fit.amplitude / rfit.amplitude;
    t.statistic = fit.slope;
    t.pass = std::fabs(fit.slope - rfit.slope) <= slope_tol && std::fabs(ratio - 1.0) <= amplitude_rel_tol;
    t.tolerance = "slope +/- " + std::to_string(slope_tol) + ", amplitude ratio within " +
                  std::to_string(amplitude_rel_tol);
    t.details = {{"slope", fit.slope},           {"slope_se", fit.se_slope},
                 {"amplitude", fit.amplitude},   {"log_amplitude_se", fit.se_log_amplitude},
                 {"expected_slope", rfit.slope}, {"expected_amplitude", rfit.amplitude},
                 {"amplitude_ratio", ratio}};
    t.runtime_seconds = sw.seconds();
    return t;
}

}  // namespace ipd::verify
