// Batch front-end: simulate / filter / diagnose / compare pipelines with
// seeded reproducibility. Exit codes: 0 success, 2 config/validation,
// 3 runtime/numerical.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "zakai/zakai.hpp"

namespace fs = std::filesystem;
using namespace zakai;

namespace {

struct CliArgs {
    std::string config;
    unsigned seed = 1;
    std::string out; // overrides scenario output dir when nonempty
    int snapshot_every = -1; // overrides scenario cadence when >= 0
};

std::string tag(unsigned seed) { return std::to_string(seed); }

fs::path out_dir(const ScenarioConfig& cfg, const CliArgs& args) {
    fs::path dir = args.out.empty() ? cfg.output_dir : args.out;
    fs::create_directories(dir);
    return dir;
}

PathSample obtain_path(const ScenarioConfig& cfg, const CliArgs& args,
                       const fs::path& dir) {
    const fs::path bin = dir / ("path_" + tag(args.seed) + ".bin");
    if (fs::exists(bin)) return pathio::read_binary(bin.string());
    return simulate_system(cfg.build(), cfg.dt, args.seed);
}

int cmd_simulate(const ScenarioConfig& cfg, const CliArgs& args) {
    const fs::path dir = out_dir(cfg, args);
    const SystemSpec spec = cfg.build();
    const PathSample path = simulate_system(spec, cfg.dt, args.seed);
    io::write_path_csv(path, spec.d, (dir / ("path_" + tag(args.seed) + ".csv")).string());
    pathio::write_binary(path, (dir / ("path_" + tag(args.seed) + ".bin")).string());
    return 0;
}

int cmd_filter(const ScenarioConfig& cfg, const CliArgs& args) {
    const fs::path dir = out_dir(cfg, args);
    const SystemSpec spec = cfg.build();
    const PathSample path = obtain_path(cfg, args, dir);
    pathio::write_binary(path, (dir / ("path_" + tag(args.seed) + ".bin")).string());

    const GridSpec grid = cfg.grid();
    const FilterTrajectory traj = solve_zakai(spec, path, grid);
    io::write_streams_csv(traj, (dir / ("streams_" + tag(args.seed) + ".csv")).string());
    io::write_trajectory_binary(traj, (dir / ("traj_" + tag(args.seed) + ".bin")).string());
    io::write_density_csv(traj.final_state.normalized, grid,
                          (dir / ("density_" + tag(args.seed) + "_final.csv")).string());
    io::write_density_binary(traj.final_state.normalized, grid,
                             (dir / ("density_" + tag(args.seed) + "_final.bin")).string());

    const int cadence =
        args.snapshot_every >= 0 ? args.snapshot_every : cfg.snapshot_every;
    if (cadence > 0) {
        for (int k = 0; k <= traj.steps(); k += cadence) {
            const FilterState st = traj.state_at(k);
            io::write_density_binary(
                st.pibar, grid,
                (dir / ("density_" + tag(args.seed) + "_k" + std::to_string(k) + ".bin"))
                    .string());
        }
    }
    return 0;
}

int cmd_diagnose(const ScenarioConfig& cfg, const CliArgs& args) {
    const fs::path dir = out_dir(cfg, args);
    const fs::path pbin = dir / ("path_" + tag(args.seed) + ".bin");
    const fs::path tbin = dir / ("traj_" + tag(args.seed) + ".bin");
    if (!fs::exists(pbin) || !fs::exists(tbin))
        throw std::runtime_error("diagnose: missing path or trajectory files; run 'filter' first");
    const PathSample path = pathio::read_binary(pbin.string());
    const FilterTrajectory traj = io::read_trajectory_binary(tbin.string());
    const SystemSpec spec = cfg.build();

    const DiagnosticsReport rep = compute_report(traj, path, spec);
    const nlohmann::json j = io::report_to_json(rep);
    std::string why;
    if (!io::validate_report_json(j, &why))
        throw std::runtime_error("diagnose: report failed schema validation: " + why);
    auto os = io::open_out((dir / ("report_" + tag(args.seed) + ".json")).string());
    os << j.dump(2) << "\n";
    return 0;
}

int cmd_compare(const ScenarioConfig& cfg, const CliArgs& args) {
    const fs::path dir = out_dir(cfg, args);
    const SystemSpec spec = cfg.build();
    const PathSample path = obtain_path(cfg, args, dir);
    const GridSpec grid = cfg.grid();

    const fs::path tbin = dir / ("traj_" + tag(args.seed) + ".bin");
    const FilterTrajectory traj = fs::exists(tbin)
                                      ? io::read_trajectory_binary(tbin.string())
                                      : solve_zakai(spec, path, grid);
    if (!traj.grid.same_as(grid))
        throw GridMismatch("compare: trajectory grid differs from scenario grid");

    nlohmann::json j;
    j["schema"] = "zakai.compare/1";
    j["seed"] = args.seed;

    // particle filter cross-check: L1 at final time
    {
        const ParticleTrajectory pf = particle_filter(
            spec, path, cfg.particle_n, args.seed + 1000003u, cfg.particle_stride);
        const DensityField kde = kde_density(pf.snapshots.back(), grid);
        j["particle_n"] = cfg.particle_n;
        j["particle_l1_final"] =
            density_distance(traj.final_state.normalized, kde, grid);
    }

    if (cfg.kalman_enabled) {
        if (cfg.system.family != "linear" || cfg.system.theta1 != 0.0 ||
            cfg.system.theta_cross != 0.0 || cfg.init_kind != "gaussian")
            throw ConfigError("compare: kalman oracle needs the independent-noise "
                              "linear-gaussian scenario");
        const int d = spec.d, m = spec.obs_dim();
        LinearGaussianSpec lin;
        lin.A = cfg.system.ba * Mat::Identity(d, d);
        lin.a0 = Vec::Constant(d, cfg.system.bc);
        lin.H = cfg.system.Ha * Mat::Identity(m, d);
        lin.theta_const = cfg.system.theta0 * Mat::Identity(d, d);
        lin.Theta_const = cfg.system.Theta0 * Mat::Identity(m, m);
        lin.m0 = Vec::Constant(d, cfg.init_center);
        lin.P0 = cfg.init_width * cfg.init_width * Mat::Identity(d, d);
        const KalmanTrajectory kf = kalman_bucy(lin, path, path.dt);

        double mean_sup = 0.0, var_sup = 0.0;
        Eigen::VectorXd xs(grid.size()), xs2(grid.size());
        for (std::int64_t f = 0; f < grid.size(); ++f) {
            xs[f] = grid.node_coords(f)[0];
            xs2[f] = xs[f] * xs[f];
        }
        for (int k = 0; k <= traj.steps(); ++k) {
            const FilterState st = traj.state_at(k);
            const double mean = conditional_expectation(st, grid, xs);
            const double var = conditional_expectation(st, grid, xs2) - mean * mean;
            mean_sup = std::max(mean_sup, std::abs(mean - kf.means[k][0]));
            var_sup = std::max(var_sup, std::abs(var - kf.covariances[k](0, 0)));
        }
        j["kalman_mean_sup_delta"] = mean_sup;
        j["kalman_var_sup_delta"] = var_sup;
    }

    auto os = io::open_out((dir / ("compare_" + tag(args.seed) + ".json")).string());
    os << j.dump(2) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    if (const char* env = std::getenv("ZAKAI_THREADS"))
        Eigen::setNbThreads(std::max(1, std::atoi(env)));

    CLI::App app{"Zakai filtering engine"};
    app.require_subcommand(1);

    CliArgs args;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", args.config, "scenario file")->required();
        sub->add_option("--seed", args.seed, "RNG seed");
        sub->add_option("--out", args.out, "output directory (overrides scenario)");
        sub->add_option("--snapshot-every", args.snapshot_every,
                        "density snapshot cadence in steps");
    };
    auto* sim = app.add_subcommand("simulate", "simulate a system path");
    auto* fil = app.add_subcommand("filter", "run the Zakai solver along a path");
    auto* dia = app.add_subcommand("diagnose", "compute the diagnostics report");
    auto* cmp = app.add_subcommand("compare", "compare the solver against oracles");
    for (auto* sub : {sim, fil, dia, cmp}) add_common(sub);

    CLI11_PARSE(app, argc, argv);

    try {
        const ScenarioConfig cfg = load_scenario(args.config);
        if (sim->parsed()) return cmd_simulate(cfg, args);
        if (fil->parsed()) return cmd_filter(cfg, args);
        if (dia->parsed()) return cmd_diagnose(cfg, args);
        return cmd_compare(cfg, args);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const GridMismatch& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 3;
    }
}
