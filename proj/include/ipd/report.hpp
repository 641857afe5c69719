#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

namespace ipd::verify {

struct TestReport {
    std::string name;
    std::string anchor;  // the law or identity under test
    std::vector<std::size_t> sample_sizes;
    double statistic = std::numeric_limits<double>::quiet_NaN();
    double p_value = std::numeric_limits<double>::quiet_NaN();
    double z_score = std::numeric_limits<double>::quiet_NaN();
    bool pass = false;
    std::string tolerance;
    double runtime_seconds = 0.0;
    nlohmann::json details = nlohmann::json::object();
};

inline nlohmann::json num(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

inline nlohmann::json to_json(const TestReport& r) {
    nlohmann::json j;
    j["name"] = r.name;
    j["anchor"] = r.anchor;
    j["sample_sizes"] = r.sample_sizes;
    j["statistic"] = num(r.statistic);
    j["p_value"] = num(r.p_value);
    j["z_score"] = num(r.z_score);
    j["pass"] = r.pass;
    j["tolerance"] = r.tolerance;
    j["runtime_seconds"] = r.runtime_seconds;
    j["details"] = r.details;
    return j;
}

inline nlohmann::json to_json(const std::vector<TestReport>& rs) {
    auto a = nlohmann::json::array();
    for (const auto& r : rs) a.push_back(to_json(r));
    return a;
}

class Stopwatch {
public:
    Stopwatch() : t0_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }

private:
    std::chrono::steady_clock::time_point t0_;
};

}  // namespace ipd::verify
