// ipd: simulate interval-partition evolutions, run the verification suites, cross-check constructions.
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ipd/suite.hpp"

namespace {

using nlohmann::json;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    double alpha = 0.5;
    double eps = 1e-4;
    double dt = 1e-3;  // relative spindle grid step
    std::vector<double> levels{0.0, 0.25, 0.5, 1.0};
    std::size_t replicates = 100;
    std::uint64_t seed = 20240611;
    double horizon = 1.0;
    std::string out = "ipd_out";
    std::string suite = "trivial";
    unsigned threads = 1;
    // subcommand options
    std::string mode = "type1";
    std::vector<double> initial{1.0};
    double start = 1.0;
    double u = 1.0;
    double scale = 1.0;
    bool drop_constant = false;

    json to_json() const {
        return {{"alpha", alpha},       {"d", 1.0 - alpha}, {"eps", eps},       {"dt", dt},
                {"levels", levels},     {"replicates", replicates},             {"seed", seed},
                {"horizon", horizon},   {"out", out},       {"suite", suite},   {"threads", threads},
                {"mode", mode},         {"initial", initial},                   {"start", start},
                {"u", u},               {"scale", scale},   {"drop_constant", drop_constant}};
    }
};

// Hash of the result-determining fields (everything except the output directory and thread count).
std::string config_hash(const RunConfig& c) {
    auto j = c.to_json();
    j.erase("out");
    j.erase("threads");
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char ch : j.dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

std::string g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        std::size_t used = 0;
        double x = 0.0;
        try {
            x = std::stod(tok, &used);
        } catch (const std::exception&) {
            throw ConfigError("not a number: " + tok);
        }
        if (used != tok.size()) throw ConfigError("not a number: " + tok);
        v.push_back(x);
    }
    return v;
}

void load_config_file(const std::string& path, RunConfig& c) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("bad config JSON: ") + e.what());
    }
    if (j.contains("alpha") && j.contains("d")) throw ConfigError("give exactly one of alpha and d");
    try {
        if (j.contains("alpha")) c.alpha = j["alpha"].get<double>();
        if (j.contains("d")) c.alpha = 1.0 - j["d"].get<double>();
        if (j.contains("eps")) c.eps = j["eps"].get<double>();
        if (j.contains("dt")) c.dt = j["dt"].get<double>();
        if (j.contains("levels")) c.levels = j["levels"].get<std::vector<double>>();
        if (j.contains("replicates")) c.replicates = j["replicates"].get<std::size_t>();
        if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("horizon")) c.horizon = j["horizon"].get<double>();
        if (j.contains("out")) c.out = j["out"].get<std::string>();
        if (j.contains("suite")) c.suite = j["suite"].get<std::string>();
        if (j.contains("threads")) c.threads = j["threads"].get<unsigned>();
        if (j.contains("mode")) c.mode = j["mode"].get<std::string>();
        if (j.contains("initial")) c.initial = j["initial"].get<std::vector<double>>();
        if (j.contains("start")) c.start = j["start"].get<double>();
        if (j.contains("u")) c.u = j["u"].get<double>();
        if (j.contains("scale")) c.scale = j["scale"].get<double>();
        if (j.contains("drop_constant")) c.drop_constant = j["drop_constant"].get<bool>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
}

void validate(const RunConfig& c) {
    auto need = [](bool ok, const std::string& what) {
        if (!ok) throw ConfigError(what);
    };
    need(c.alpha > 0.0 && c.alpha < 1.0, "alpha must lie in (0,1)");
    need(c.eps > 0.0 && std::isfinite(c.eps), "eps must be positive");
    need(c.dt > 0.0 && c.dt <= 1.0, "dt must lie in (0,1]");
    need(c.replicates >= 1, "replicates must be at least 1");
    need(c.threads >= 1, "threads must be at least 1");
    need(c.horizon > 0.0 && std::isfinite(c.horizon), "horizon must be positive");
    need(c.u >= 0.0 && std::isfinite(c.u), "u must be nonnegative");
    need(c.scale > 0.0, "scale must be positive");
    need(!c.levels.empty(), "levels must not be empty");
    for (std::size_t i = 0; i < c.levels.size(); ++i) {
        need(c.levels[i] >= 0.0 && std::isfinite(c.levels[i]), "levels must be nonnegative");
        if (i > 0) need(c.levels[i] > c.levels[i - 1], "levels must be increasing");
    }
    for (double b : c.initial) need(b > 0.0 && std::isfinite(b), "initial blocks must be positive");
    need(c.mode == "type1" || c.mode == "type0" || c.mode == "bessel" || c.mode == "scaffolding",
         "mode must be type1, type0, bessel or scaffolding");
    need(c.suite == "trivial" || c.suite == "full" || c.suite == "negative-controls",
         "suite must be trivial, full or negative-controls");
    if (c.mode == "type0") {
        need(c.start > 0.0, "start must be positive");
        for (double y : c.levels) need(y <= c.start, "type-0 levels must lie in [0, start]");
    }
}

std::filesystem::path out_dir(const RunConfig& c) {
    std::filesystem::path p(c.out);
    std::filesystem::create_directories(p);
    return p;
}

json envelope(const RunConfig& c) { return {{"config", c.to_json()}, {"config_hash", config_hash(c)}, {"seed", c.seed}}; }

ipd::suite::SuiteConfig suite_config(const RunConfig& c) {
    ipd::suite::SuiteConfig s;
    s.alpha = c.alpha;
    s.eps = c.eps;
    s.seed = c.seed;
    s.scale = c.scale;
    s.threads = c.threads;
    s.u = c.u;
    s.drop_constant = c.drop_constant;
    return s;
}

// CSV summary table of reports
void write_report_csv(const std::filesystem::path& p, const RunConfig& c,
                      const std::vector<ipd::verify::TestReport>& rs) {
    std::ofstream f(p);
    f << "config_hash,seed,name,pass,statistic,p_value,z_score,tolerance,runtime_seconds\n";
    for (const auto& r : rs)
        f << config_hash(c) << ',' << c.seed << ",\"" << r.name << "\"," << (r.pass ? 1 : 0) << ','
          << g17(r.statistic) << ',' << g17(r.p_value) << ',' << g17(r.z_score) << ",\"" << r.tolerance << "\","
          << g17(r.runtime_seconds) << '\n';
}

int cmd_simulate(const RunConfig& c) {
    namespace sc = ipd::scaffolding;
    const auto dir = out_dir(c);
    const std::string hash = config_hash(c);
    const double d = 1.0 - c.alpha;
    struct Rep {
        std::vector<ipd::skewer::IntervalPartition> parts;
        json path;
    };
    const auto reps = ipd::suite::detail::map_replicates<Rep>(c.replicates, c.threads, [&](std::size_t i) {
        auto s = ipd::rng::RngStream(c.seed, 0).split(i);
        Rep r;
        if (c.mode == "type1") {
            r.parts = sc::type1_skewer_run(s, ipd::skewer::IntervalPartition::from_blocks(c.initial), c.levels, c.alpha,
                                           {c.eps, false});
        } else if (c.mode == "type0") {
            r.parts = sc::type0_skewer_run(s, c.start, c.levels, c.alpha, {c.eps, false});
        } else {
            sc::SpindleGrid grid;
            grid.relative_dt = c.dt;
            grid.knot_levels = c.levels;
            const auto X = c.mode == "bessel" ? ipd::bessel::sample_upper_parts(s, c.u, d, c.eps, c.eps / 200.0, grid)
                                              : sc::sample_marked_scaffolding(s, c.alpha, c.eps, c.horizon, grid);
            const auto p = ipd::bessel::build_R_H_from_scaffolding(X);
            for (double y : c.levels)
                r.parts.push_back(c.mode == "bessel" ? ipd::bessel::beta_from_bessel(p, y) : ipd::skewer::skewer(X, y));
            // thinned (t, R, H) path
            const std::size_t stride = std::max<std::size_t>(1, p.t.size() / 2000);
            json t = json::array(), R = json::array(), H = json::array();
            for (std::size_t k = 0; k < p.t.size(); k += stride) {
                t.push_back(p.t[k]);
                R.push_back(p.R[k]);
                H.push_back(p.H[k]);
            }
            r.path = {{"t", t}, {"R", R}, {"H", H}, {"excursions", p.excursions.size()}};
        }
        return r;
    });
    std::ofstream csv(dir / "simulate.csv");
    csv << "config_hash,seed,replicate,level,total_mass,block_count,largest_block,blocks\n";
    std::ofstream nd(dir / "paths.ndjson");
    for (std::size_t i = 0; i < reps.size(); ++i) {
        json line = {{"config_hash", hash}, {"seed", c.seed}, {"replicate", i}, {"mode", c.mode}};
        json levels = json::array();
        for (std::size_t k = 0; k < c.levels.size(); ++k) {
            const auto& p = reps[i].parts[k];
            std::string blocks;
            for (std::size_t j = 0; j < p.blocks.size(); ++j) blocks += (j ? ";" : "") + g17(p.blocks[j]);
            csv << hash << ',' << c.seed << ',' << i << ',' << g17(c.levels[k]) << ',' << g17(p.total_mass) << ','
                << p.blocks.size() << ',' << g17(p.largest()) << ',' << blocks << '\n';
            levels.push_back({{"level", c.levels[k]}, {"total_mass", p.total_mass}, {"blocks", p.blocks}});
        }
        line["levels"] = levels;
        if (!reps[i].path.is_null()) line["path"] = reps[i].path;
        nd << line.dump() << '\n';
    }
    auto meta = envelope(c);
    meta["files"] = {"simulate.csv", "paths.ndjson"};
    std::ofstream(dir / "simulate.json") << meta.dump(2) << '\n';
    std::cout << "wrote " << (dir / "simulate.csv").string() << " and " << (dir / "paths.ndjson").string() << "\n";
    return 0;
}

int finish_reports(const RunConfig& c, const std::string& stem, const std::vector<ipd::verify::TestReport>& rs) {
    const auto dir = out_dir(c);
    auto doc = envelope(c);
    doc["reports"] = ipd::verify::to_json(rs);
    bool all = !rs.empty();
    for (const auto& r : rs) {
        all = all && r.pass;
        std::printf("%-60s %s\n", r.name.c_str(), r.pass ? "PASS" : "FAIL");
    }
    doc["pass"] = all;
    std::ofstream(dir / (stem + ".json")) << doc.dump(2) << '\n';
    write_report_csv(dir / (stem + ".csv"), c, rs);
    return all ? 0 : 1;
}

int cmd_verify(const RunConfig& c) {
    const auto sc = suite_config(c);
    std::vector<ipd::verify::TestReport> rs;
    if (c.suite == "trivial") {
        rs = ipd::suite::trivial_suite(sc);
    } else if (c.suite == "negative-controls") {
        rs = ipd::suite::negative_controls(sc);
    } else {
        for (const auto& cr : ipd::suite::run_acceptance(sc)) rs.push_back(cr.report);
    }
    return finish_reports(c, "verify_" + c.suite, rs);
}

int cmd_crosscheck(const RunConfig& c) {
    const auto sc = suite_config(c);
    return finish_reports(c, "crosscheck", {ipd::suite::crosscheck_constructions(sc, 70, static_cast<double>(c.replicates))});
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Interval-partition diffusions: simulation and verification"};
    app.require_subcommand(1);
    std::string config_path, levels, initial;
    std::optional<double> alpha, d, eps, dt, horizon, start, u, scale;
    std::optional<std::size_t> replicates;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out, suite, mode;
    std::optional<unsigned> threads;
    bool drop_constant = false;

    auto common = [&](CLI::App* a) {
        a->add_option("--config", config_path, "JSON config file; flags override it");
        auto* oa = a->add_option("--alpha", alpha, "stable index alpha = 1 - d");
        auto* od = a->add_option("--d", d, "dimension d = 1 - alpha");
        oa->excludes(od);
        a->add_option("--eps", eps, "jump truncation");
        a->add_option("--dt", dt, "spindle grid step relative to the lifetime");
        a->add_option("--levels", levels, "comma-separated increasing levels");
        a->add_option("--replicates", replicates, "number of replicates");
        a->add_option("--seed", seed, "master seed");
        a->add_option("--horizon", horizon, "scaffolding time horizon");
        a->add_option("--out", out, "output directory");
        a->add_option("--threads", threads, "worker threads");
        a->add_option("--scale", scale, "multiplier for suite replicate counts");
        a->add_option("--u", u, "local time clock at (0,0)");
    };
    auto* sim = app.add_subcommand("simulate", "sample skewer runs and paths");
    common(sim);
    sim->add_option("--mode", mode, "type1, type0, bessel or scaffolding");
    sim->add_option("--initial", initial, "type1 initial blocks (comma list)");
    sim->add_option("--start", start, "type0 start level");
    auto* ver = app.add_subcommand("verify", "run a verification suite");
    common(ver);
    ver->add_option("--suite", suite, "trivial, full or negative-controls");
    auto* cc = app.add_subcommand("crosscheck", "compare the scaffolding and Bessel constructions");
    common(cc);
    cc->add_flag("--drop-constant", drop_constant, "use v = u instead of v = 2^{1-d} u");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    RunConfig c;
    if (cc->parsed()) c.replicates = 10000;
    try {
        if (!config_path.empty()) load_config_file(config_path, c);
        if (alpha) c.alpha = *alpha;
        if (d) c.alpha = 1.0 - *d;
        if (eps) c.eps = *eps;
        if (dt) c.dt = *dt;
        if (!levels.empty()) c.levels = parse_list(levels);
        if (replicates) c.replicates = *replicates;
        if (seed) c.seed = *seed;
        if (horizon) c.horizon = *horizon;
        if (out) c.out = *out;
        if (suite) c.suite = *suite;
        if (threads) c.threads = *threads;
        if (mode) c.mode = *mode;
        if (!initial.empty()) c.initial = parse_list(initial);
        if (start) c.start = *start;
        if (u) c.u = *u;
        if (scale) c.scale = *scale;
        if (drop_constant) c.drop_constant = true;
        validate(c);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (sim->parsed()) return cmd_simulate(c);
        if (ver->parsed()) return cmd_verify(c);
        return cmd_crosscheck(c);
    } catch (const ipd::ParameterError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
