#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <string>
#include <utility>

#include "zakai/errors.hpp"
#include "zakai/model.hpp"
#include "zakai/system.hpp"

namespace zakai {

/// One realization of (w, z) on a uniform mesh. Row k of `w` holds the
/// Wiener increment over [t_k, t_{k+1}); row k of `z` the state at t_k.
struct PathSample {
    double dt = 0.0;
    Vec times;          // steps + 1
    Eigen::MatrixXd w;  // steps x d2
    Eigen::MatrixXd z;  // (steps + 1) x d1
    unsigned seed = 0;

    int steps() const { return static_cast<int>(w.rows()); }

    Vec x_at(int k, int d) const { return z.row(k).head(d).transpose(); }
    Vec y_at(int k, int d) const {
        return z.row(k).tail(z.cols() - d).transpose();
    }
    Vec dy(int k, int d) const {
        return (z.row(k + 1) - z.row(k)).tail(z.cols() - d).transpose();
    }
};

inline int mesh_steps(double T, double dt) {
    const double raw = T / dt;
    const int n = static_cast<int>(std::lround(raw));
    if (n < 1 || std::abs(raw - n) > 1e-9 * raw)
        throw ConfigError("time mesh: T/dt must be a positive integer");
    return n;
}

/// Euler-Maruyama on dz = b~ dt + theta~ dw. Deterministic per seed.
inline PathSample simulate_system(const SystemSpec& spec, double dt,
                                  unsigned seed) {
    spec.validate();
    const int n = mesh_steps(spec.T, dt);
    const int d = spec.d, d1 = spec.d1, d2 = spec.d2;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    PathSample path;
    path.dt = dt;
    path.seed = seed;
    path.times = Vec::LinSpaced(n + 1, 0.0, n * dt);
    path.w.resize(n, d2);
    path.z.resize(n + 1, d1);

    Vec z0(d1);
    for (int a = 0; a < d; ++a) {
        // open-interval quantile keeps the inverse CDF finite
        double q = unif(rng);
        q = std::min(std::max(q, 1e-12), 1.0 - 1e-12);
        z0[a] = spec.pi0.inverse_cdf_axis(a, q);
    }
    z0.tail(d1 - d) = spec.y0;
    path.z.row(0) = z0.transpose();

    const double sdt = std::sqrt(dt);
    Vec z = z0, dw(d2);
    for (int k = 0; k < n; ++k) {
        const double t = path.times[k];
        for (int j = 0; j < d2; ++j) dw[j] = sdt * gauss(rng);
        path.w.row(k) = dw.transpose();
        z += spec.drift_full(t, z) * dt + spec.diffusion_full(t, z) * dw;
        if (!z.allFinite() || z.norm() > spec.guard_radius)
            throw BlowupError("simulate_system: state left the guard radius");
        path.z.row(k + 1) = z.transpose();
    }
    return path;
}

/// Aggregates a path onto a mesh coarser by `factor`: states are subsampled,
/// increments summed. Lets a filter run below the simulation resolution.
inline PathSample coarsen(const PathSample& path, int factor) {
    if (factor < 1 || path.steps() % factor != 0)
        throw ConfigError("coarsen: factor must divide the step count");
    const int n = path.steps() / factor;
    PathSample out;
    out.dt = path.dt * factor;
    out.seed = path.seed;
    out.times.resize(n + 1);
    out.w = Eigen::MatrixXd::Zero(n, path.w.cols());
    out.z.resize(n + 1, path.z.cols());
    for (int k = 0; k <= n; ++k) {
        out.times[k] = path.times[k * factor];
        out.z.row(k) = path.z.row(k * factor);
    }
    for (int k = 0; k < n; ++k)
        for (int s = 0; s < factor; ++s) out.w.row(k) += path.w.row(k * factor + s);
    return out;
}

/// Per-step increments of w_hat = int Psi dy and w_tilde = int Psi Theta dw.
/// Satisfies d(w_hat) = beta~ dt + d(w_tilde) exactly at the discrete level.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> derived_wieners(
    const PathSample& path, const SystemSpec& spec) {
    const int n = path.steps();
    const int m = spec.obs_dim();
    Eigen::MatrixXd w_hat(n, m), w_tilde(n, m);
    for (int k = 0; k < n; ++k) {
        const double t = path.times[k];
        const Vec y = path.y_at(k, spec.d);
        const Mat Psi = compute_psi(spec, t, y);
        w_hat.row(k) = (Psi * path.dy(k, spec.d)).transpose();
        w_tilde.row(k) =
            (Psi * spec.Theta(t, y) * path.w.row(k).transpose()).transpose();
    }
    return {w_hat, w_tilde};
}

/// Girsanov weight rho_t = exp(-int beta~ dw~ - 1/2 int |beta~|^2 ds),
/// left-point discretization, one value per mesh point.
inline Vec likelihood_rho(const PathSample& path, const SystemSpec& spec) {
    const int n = path.steps();
    Vec rho(n + 1);
    rho[0] = 1.0;
    double log_rho = 0.0;
    for (int k = 0; k < n; ++k) {
        const double t = path.times[k];
        const Vec y = path.y_at(k, spec.d);
        const Mat Psi = compute_psi(spec, t, y);
        const Vec beta = Psi * spec.B(t, path.z.row(k).transpose());
        const Vec dwt = Psi * spec.Theta(t, y) * path.w.row(k).transpose();
        log_rho += -beta.dot(dwt) - 0.5 * beta.squaredNorm() * path.dt;
        rho[k + 1] = std::exp(log_rho);
    }
    return rho;
}

namespace pathio {

inline void write_binary(const PathSample& path, const std::string& file) {
    std::ofstream os(file, std::ios::binary);
    if (!os) throw ConfigError("cannot open '" + file + "' for writing");
    const char magic[8] = {'Z', 'K', 'P', 'A', 'T', 'H', '0', '1'};
    os.write(magic, 8);
    const std::int64_t hdr[3] = {path.steps(), path.w.cols(), path.z.cols()};
    os.write(reinterpret_cast<const char*>(hdr), sizeof(hdr));
    const std::uint64_t seed = path.seed;
    os.write(reinterpret_cast<const char*>(&seed), sizeof(seed));
    os.write(reinterpret_cast<const char*>(&path.dt), sizeof(double));
    os.write(reinterpret_cast<const char*>(path.times.data()),
             static_cast<std::streamsize>(sizeof(double) * path.times.size()));
    os.write(reinterpret_cast<const char*>(path.w.data()),
             static_cast<std::streamsize>(sizeof(double) * path.w.size()));
    os.write(reinterpret_cast<const char*>(path.z.data()),
             static_cast<std::streamsize>(sizeof(double) * path.z.size()));
}

inline PathSample read_binary(const std::string& file) {
    std::ifstream is(file, std::ios::binary);
    if (!is) throw ConfigError("cannot open '" + file + "'");
    char magic[8];
    is.read(magic, 8);
    if (std::string(magic, 8) != "ZKPATH01")
        throw ConfigError("'" + file + "' is not a path replay file");
    std::int64_t hdr[3];
    is.read(reinterpret_cast<char*>(hdr), sizeof(hdr));
    std::uint64_t seed;
    is.read(reinterpret_cast<char*>(&seed), sizeof(seed));
    PathSample path;
    path.seed = static_cast<unsigned>(seed);
    is.read(reinterpret_cast<char*>(&path.dt), sizeof(double));
    path.times.resize(hdr[0] + 1);
    path.w.resize(hdr[0], hdr[1]);
    path.z.resize(hdr[0] + 1, hdr[2]);
    is.read(reinterpret_cast<char*>(path.times.data()),
            static_cast<std::streamsize>(sizeof(double) * path.times.size()));
    is.read(reinterpret_cast<char*>(path.w.data()),
            static_cast<std::streamsize>(sizeof(double) * path.w.size()));
    is.read(reinterpret_cast<char*>(path.z.data()),
            static_cast<std::streamsize>(sizeof(double) * path.z.size()));
    if (!is) throw ConfigError("'" + file + "' is truncated");
    return path;
}

} // namespace pathio

} // namespace zakai
