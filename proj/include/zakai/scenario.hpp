#pragma once

#include <cmath>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "zakai/errors.hpp"
#include "zakai/families.hpp"
#include "zakai/grid.hpp"
#include "zakai/system.hpp"

namespace zakai {

/// Parsed scenario file. Plain "[section]" / "key = value" text; unknown
/// keys are rejected so typos fail loudly.
struct ScenarioConfig {
    FamilyParams system;
    std::string init_kind = "gaussian"; // gaussian | tent
    double init_center = 0.0;
    double init_width = 1.0;
    double y0 = 0.0;

    double grid_R = 6.0;
    double grid_h = 0.02;

    double dt = 1e-3;

    std::vector<unsigned> seeds{1};
    int snapshot_every = 0; // 0 = final state only

    int particle_n = 10000;
    int particle_stride = 1;
    bool kalman_enabled = false;

    std::string output_dir = "out";

    GridSpec grid() const { return GridSpec(system.d, grid_R, grid_h); }

    SystemSpec build() const {
        FamilyParams p = system;
        Vec c = Vec::Constant(p.d, init_center);
        if (init_kind == "gaussian")
            p.pi0 = InitialDensity::gaussian(c, init_width);
        else if (init_kind == "tent")
            p.pi0 = InitialDensity::tent(c, init_width);
        else
            throw ConfigError("unknown init kind '" + init_kind +
                              "' (known: gaussian, tent)");
        p.y0 = Vec::Constant(p.d1 - p.d, y0);
        return build_system(p);
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

inline double parse_num(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double x;
    try {
        x = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw ConfigError("field '" + key + "': cannot parse '" + v + "'");
    }
    if (pos != v.size())
        throw ConfigError("field '" + key + "': trailing junk in '" + v + "'");
    return x;
}

inline double parse_positive(const std::string& key, const std::string& v) {
    const double x = parse_num(key, v);
    if (x <= 0.0) throw ConfigError("field '" + key + "' must be positive");
    return x;
}

} // namespace detail

inline ScenarioConfig parse_scenario(std::istream& in) {
    ScenarioConfig cfg;
    std::string line, section;
    int lineno = 0;
    std::set<std::string> seen;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) +
                                  ": malformed section header");
            section = line.substr(1, line.size() - 2);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) +
                              ": expected 'key = value'");
        const std::string key = section + "." + detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        if (!seen.insert(key).second)
            throw ConfigError("duplicate key '" + key + "'");

        using detail::parse_num;
        using detail::parse_positive;
        if (key == "system.family") {
            if (!known_family(val))
                throw ConfigError("field 'system.family': unknown family '" + val +
                                  "' (known: constant, linear, sinusoid, kink)");
            cfg.system.family = val;
        } else if (key == "system.d")
            cfg.system.d = static_cast<int>(parse_positive(key, val));
        else if (key == "system.d1")
            cfg.system.d1 = static_cast<int>(parse_positive(key, val));
        else if (key == "system.d2")
            cfg.system.d2 = static_cast<int>(parse_positive(key, val));
        else if (key == "system.ba") cfg.system.ba = parse_num(key, val);
        else if (key == "system.bc") cfg.system.bc = parse_num(key, val);
        else if (key == "system.bs") cfg.system.bs = parse_num(key, val);
        else if (key == "system.Ha") cfg.system.Ha = parse_num(key, val);
        else if (key == "system.Hc") cfg.system.Hc = parse_num(key, val);
        else if (key == "system.Hs") cfg.system.Hs = parse_num(key, val);
        else if (key == "system.theta0") cfg.system.theta0 = parse_num(key, val);
        else if (key == "system.theta1") cfg.system.theta1 = parse_num(key, val);
        else if (key == "system.theta_cross")
            cfg.system.theta_cross = parse_num(key, val);
        else if (key == "system.Theta0") cfg.system.Theta0 = parse_num(key, val);
        else if (key == "system.K") cfg.system.K = parse_positive(key, val);
        else if (key == "system.delta")
            cfg.system.delta = parse_positive(key, val);
        else if (key == "system.T") cfg.system.T = parse_positive(key, val);
        else if (key == "system.y0") cfg.y0 = parse_num(key, val);
        else if (key == "init.kind") cfg.init_kind = val;
        else if (key == "init.center") cfg.init_center = parse_num(key, val);
        else if (key == "init.width") cfg.init_width = parse_positive(key, val);
        else if (key == "grid.R") cfg.grid_R = parse_positive(key, val);
        else if (key == "grid.h") cfg.grid_h = parse_positive(key, val);
        else if (key == "time.dt") cfg.dt = parse_positive(key, val);
        else if (key == "run.seeds") {
            cfg.seeds.clear();
            std::istringstream ss(val);
            std::string tok;
            while (ss >> tok)
                cfg.seeds.push_back(
                    static_cast<unsigned>(parse_positive(key, tok)));
            if (cfg.seeds.empty())
                throw ConfigError("field 'run.seeds' must list at least one seed");
        } else if (key == "run.snapshot_every")
            cfg.snapshot_every = static_cast<int>(parse_num(key, val));
        else if (key == "oracle.particle_n")
            cfg.particle_n = static_cast<int>(parse_positive(key, val));
        else if (key == "oracle.particle_stride")
            cfg.particle_stride = static_cast<int>(parse_positive(key, val));
        else if (key == "oracle.kalman")
            cfg.kalman_enabled = (val == "on" || val == "true" || val == "1");
        else if (key == "output.dir")
            cfg.output_dir = val;
        else
            throw ConfigError("unknown key '" + key + "'");
    }

    // mesh consistency is a config error, caught here rather than at run time
    const double ratio = cfg.system.T / cfg.dt;
    if (std::abs(ratio - std::lround(ratio)) > 1e-9 * ratio)
        throw ConfigError("field 'time.dt': T/dt must be an integer");
    return cfg;
}

inline ScenarioConfig load_scenario(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open scenario file '" + file + "'");
    return parse_scenario(in);
}

/// Canonical text form; parse(to_text(cfg)) reproduces cfg.
inline std::string to_text(const ScenarioConfig& cfg) {
    std::ostringstream os;
    os.precision(17);
    os << "[system]\n";
    os << "family = " << cfg.system.family << "\n";
    os << "d = " << cfg.system.d << "\nd1 = " << cfg.system.d1
       << "\nd2 = " << cfg.system.d2 << "\n";
    os << "ba = " << cfg.system.ba << "\nbc = " << cfg.system.bc
       << "\nbs = " << cfg.system.bs << "\n";
    os << "Ha = " << cfg.system.Ha << "\nHc = " << cfg.system.Hc
       << "\nHs = " << cfg.system.Hs << "\n";
    os << "theta0 = " << cfg.system.theta0 << "\ntheta1 = " << cfg.system.theta1
       << "\ntheta_cross = " << cfg.system.theta_cross << "\n";
    os << "Theta0 = " << cfg.system.Theta0 << "\n";
    os << "K = " << cfg.system.K << "\ndelta = " << cfg.system.delta
       << "\nT = " << cfg.system.T << "\n";
    os << "y0 = " << cfg.y0 << "\n";
    os << "[init]\nkind = " << cfg.init_kind << "\ncenter = " << cfg.init_center
       << "\nwidth = " << cfg.init_width << "\n";
    os << "[grid]\nR = " << cfg.grid_R << "\nh = " << cfg.grid_h << "\n";
    os << "[time]\ndt = " << cfg.dt << "\n";
    os << "[run]\nseeds =";
    for (unsigned s : cfg.seeds) os << " " << s;
    os << "\nsnapshot_every = " << cfg.snapshot_every << "\n";
    os << "[oracle]\nparticle_n = " << cfg.particle_n
       << "\nparticle_stride = " << cfg.particle_stride
       << "\nkalman = " << (cfg.kalman_enabled ? "on" : "off") << "\n";
    os << "[output]\ndir = " << cfg.output_dir << "\n";
    return os.str();
}

} // namespace zakai
