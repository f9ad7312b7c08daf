#pragma once

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include <json.hpp>

#include "zakai/diagnostics.hpp"
#include "zakai/errors.hpp"
#include "zakai/grid.hpp"
#include "zakai/sde.hpp"
#include "zakai/solver.hpp"

namespace zakai {
namespace io {

constexpr const char* kDiagnosticsSchema = "zakai.diagnostics/1";

// All floating-point text output uses 17 significant digits so that reruns
// and round-trips are exact.
inline std::ofstream open_out(const std::string& file) {
    std::ofstream os(file);
    if (!os) throw ConfigError("cannot open '" + file + "' for writing");
    os << std::setprecision(17);
    return os;
}

inline void write_path_csv(const PathSample& path, int d,
                           const std::string& file) {
    auto os = open_out(file);
    const int m = static_cast<int>(path.z.cols()) - d;
    os << "t";
    for (int i = 1; i <= d; ++i) os << ",x_" << i;
    for (int i = 1; i <= m; ++i) os << ",y_" << i;
    os << "\n";
    for (int k = 0; k < path.times.size(); ++k) {
        os << path.times[k];
        for (int c = 0; c < path.z.cols(); ++c) os << "," << path.z(k, c);
        os << "\n";
    }
}

inline void write_density_csv(const DensityField& field, const GridSpec& grid,
                              const std::string& file) {
    auto os = open_out(file);
    for (int a = 1; a <= grid.d; ++a) os << "x_" << a << ",";
    os << "value\n";
    for (std::int64_t f = 0; f < grid.size(); ++f) {
        const Vec x = grid.node_coords(f);
        for (int a = 0; a < grid.d; ++a) os << x[a] << ",";
        os << field.values[f] << "\n";
    }
}

/// Binary snapshot: magic, d, nodes per axis, h, R, then the flat array of
/// little-endian 64-bit floats.
inline void write_density_binary(const DensityField& field,
                                 const GridSpec& grid,
                                 const std::string& file) {
    std::ofstream os(file, std::ios::binary);
    if (!os) throw ConfigError("cannot open '" + file + "' for writing");
    const char magic[8] = {'Z', 'K', 'D', 'E', 'N', 'S', '0', '1'};
    os.write(magic, 8);
    const std::int64_t d = grid.d, n = grid.nodes_per_axis();
    os.write(reinterpret_cast<const char*>(&d), sizeof(d));
    os.write(reinterpret_cast<const char*>(&n), sizeof(n));
    os.write(reinterpret_cast<const char*>(&grid.h), sizeof(double));
    os.write(reinterpret_cast<const char*>(&grid.R), sizeof(double));
    os.write(reinterpret_cast<const char*>(field.values.data()),
             static_cast<std::streamsize>(sizeof(double) * field.values.size()));
}

inline void write_streams_csv(const FilterTrajectory& traj,
                              const std::string& file) {
    auto os = open_out(file);
    const int m = static_cast<int>(traj.p_beta.cols());
    os << "t,mass,min_value,max_value";
    for (int k = 1; k <= m; ++k) os << ",p_beta_" << k;
    os << "\n";
    for (int k = 0; k <= traj.steps(); ++k) {
        os << traj.times[k] << "," << traj.mass[k] << "," << traj.min_value[k]
           << "," << traj.max_value[k];
        for (int c = 0; c < m; ++c) os << "," << traj.p_beta(k, c);
        os << "\n";
    }
}

inline DensityField read_density_binary(const std::string& file,
                                        const GridSpec& grid) {
    std::ifstream is(file, std::ios::binary);
    if (!is) throw ConfigError("cannot open '" + file + "'");
    char magic[8];
    is.read(magic, 8);
    if (std::string(magic, 8) != "ZKDENS01")
        throw ConfigError("'" + file + "' is not a density snapshot");
    std::int64_t d, n;
    double h, R;
    is.read(reinterpret_cast<char*>(&d), sizeof(d));
    is.read(reinterpret_cast<char*>(&n), sizeof(n));
    is.read(reinterpret_cast<char*>(&h), sizeof(h));
    is.read(reinterpret_cast<char*>(&R), sizeof(R));
    if (d != grid.d || n != grid.nodes_per_axis() || h != grid.h || R != grid.R)
        throw GridMismatch("'" + file + "' was written on a different grid");
    Eigen::VectorXd v(grid.size());
    is.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(sizeof(double) * v.size()));
    if (!is) throw ConfigError("'" + file + "' is truncated");
    return DensityField(grid, v);
}

inline void write_trajectory_binary(const FilterTrajectory& traj,
                                    const std::string& file) {
    std::ofstream os(file, std::ios::binary);
    if (!os) throw ConfigError("cannot open '" + file + "' for writing");
    const char magic[8] = {'Z', 'K', 'T', 'R', 'A', 'J', '0', '1'};
    os.write(magic, 8);
    const std::int64_t hdr[5] = {traj.grid.d, traj.grid.nodes_per_axis(),
                                 traj.steps(), traj.p_beta.cols(),
                                 traj.history.size() > 0 ? 1 : 0};
    os.write(reinterpret_cast<const char*>(hdr), sizeof(hdr));
    const double geo[3] = {traj.grid.h, traj.grid.R, traj.dt};
    os.write(reinterpret_cast<const char*>(geo), sizeof(geo));
    auto dump = [&os](const auto& m) {
        os.write(reinterpret_cast<const char*>(m.data()),
                 static_cast<std::streamsize>(sizeof(double) * m.size()));
    };
    dump(traj.times);
    dump(traj.mass);
    dump(traj.min_value);
    dump(traj.max_value);
    dump(traj.p_beta);
    if (traj.history.size() > 0) dump(traj.history);
    dump(traj.final_state.pibar.values);
}

inline FilterTrajectory read_trajectory_binary(const std::string& file) {
    std::ifstream is(file, std::ios::binary);
    if (!is) throw ConfigError("cannot open '" + file + "'");
    char magic[8];
    is.read(magic, 8);
    if (std::string(magic, 8) != "ZKTRAJ01")
        throw ConfigError("'" + file + "' is not a trajectory file");
    std::int64_t hdr[5];
    is.read(reinterpret_cast<char*>(hdr), sizeof(hdr));
    double geo[3];
    is.read(reinterpret_cast<char*>(geo), sizeof(geo));
    FilterTrajectory traj;
    traj.grid = GridSpec(static_cast<int>(hdr[0]), geo[1], geo[0]);
    traj.dt = geo[2];
    const std::int64_t n = hdr[2], m = hdr[3];
    auto slurp = [&is](auto& mat) {
        is.read(reinterpret_cast<char*>(mat.data()),
                static_cast<std::streamsize>(sizeof(double) * mat.size()));
    };
    traj.times.resize(n + 1);
    traj.mass.resize(n + 1);
    traj.min_value.resize(n + 1);
    traj.max_value.resize(n + 1);
    traj.p_beta.resize(n + 1, m);
    slurp(traj.times);
    slurp(traj.mass);
    slurp(traj.min_value);
    slurp(traj.max_value);
    slurp(traj.p_beta);
    if (hdr[4]) {
        traj.history.resize(n + 1, traj.grid.size());
        slurp(traj.history);
    }
    Eigen::VectorXd fin(traj.grid.size());
    slurp(fin);
    if (!is) throw ConfigError("'" + file + "' is truncated");
    traj.final_state = FilterState(traj.grid, traj.times[n], fin);
    return traj;
}

inline nlohmann::json report_to_json(const DiagnosticsReport& rep) {
    nlohmann::json j;
    j["schema"] = kDiagnosticsSchema;
    j["mass_residual_sup"] = rep.mass_residual_sup;
    j["exp_mass_residual_sup"] = rep.exp_mass_residual_sup;
    j["innovation_qv_error"] = rep.innovation_qv_error;
    j["innovation_mean_z"] = rep.innovation_mean_z;
    j["holder_t_exponent"] = rep.holder_t_exponent;
    j["holder_x_exponent"] = rep.holder_x_exponent;
    j["holder_t_degenerate"] = rep.holder_t_degenerate;
    j["holder_x_degenerate"] = rep.holder_x_degenerate;
    j["min_density_ratio"] = rep.min_density_ratio;
    j["w12_norm_series"] = rep.w12_norm_series;
    j["w14_norm_series"] = rep.w14_norm_series;
    j["raw_wiener_available"] = rep.raw_wiener_available;
    return j;
}

/// Checks a diagnostics JSON document against the versioned schema:
/// required keys, value types, finite numbers.
inline bool validate_report_json(const nlohmann::json& j,
                                 std::string* why = nullptr) {
    auto fail = [&](const std::string& msg) {
        if (why) *why = msg;
        return false;
    };
    if (!j.is_object()) return fail("not an object");
    if (!j.contains("schema") || j["schema"] != kDiagnosticsSchema)
        return fail("missing or wrong schema tag");
    for (const char* key :
         {"mass_residual_sup", "exp_mass_residual_sup", "innovation_qv_error",
          "innovation_mean_z", "holder_t_exponent", "holder_x_exponent",
          "min_density_ratio"}) {
        if (!j.contains(key) || !j[key].is_number())
            return fail(std::string("missing numeric field '") + key + "'");
        const double v = j[key].get<double>();
        if (!std::isfinite(v))
            return fail(std::string("non-finite field '") + key + "'");
    }
    for (const char* key :
         {"holder_t_degenerate", "holder_x_degenerate", "raw_wiener_available"}) {
        if (!j.contains(key) || !j[key].is_boolean())
            return fail(std::string("missing boolean field '") + key + "'");
    }
    for (const char* key : {"w12_norm_series", "w14_norm_series"}) {
        if (!j.contains(key) || !j[key].is_array())
            return fail(std::string("missing array field '") + key + "'");
        for (const auto& v : j[key])
            if (!v.is_number() || !std::isfinite(v.get<double>()))
                return fail(std::string("non-finite entry in '") + key + "'");
    }
    const double at = j["holder_t_exponent"].get<double>();
    const double ax = j["holder_x_exponent"].get<double>();
    if (at < 0.0 || at > 1.5 || ax < 0.0 || ax > 1.5)
        return fail("holder exponent out of [0, 1.5]");
    return true;
}

} // namespace io
} // namespace zakai
