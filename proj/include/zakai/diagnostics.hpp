#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <utility>
#include <vector>

#include "zakai/errors.hpp"
#include "zakai/grid.hpp"
#include "zakai/model.hpp"
#include "zakai/sde.hpp"
#include "zakai/solver.hpp"

namespace zakai {

/// Conditional mean of beta: P_t[beta] = (pibar, beta) / (pibar, 1).
inline Vec p_beta(const FilterState& state,
                  const ConditionedCoefficients& coeffs) {
    if (state.pibar.mass < 1e-12)
        throw MassCollapseError("p_beta: mass below 1e-12");
    return detail::p_beta_of(state, coeffs);
}

/// Reconstructs the mass SDE
///   (pibar_t,1) = 1 + int (pibar,beta^k) Psi^{kr} B^r ds
///               + int (pibar,beta^k) Psi^{kr} Theta^{rn} dw^n
/// by left-point sums and returns sup_t of the defect. The dw-integral
/// needs the raw Wiener increments, so this only runs in simulation mode.
inline double mass_identity_residual(const FilterTrajectory& traj,
                                     const PathSample& path,
                                     const SystemSpec& spec) {
    const int n = traj.steps();
    const int m = spec.obs_dim();
    double rhs = traj.mass[0];
    double sup = 0.0;
    for (int k = 0; k < n; ++k) {
        const double t = traj.times[k];
        const Vec y = path.y_at(k, spec.d);
        const ConditionedCoefficients coeffs =
            condition_coefficients(spec, t, y, traj.grid);
        const FilterState state = traj.state_at(k);
        Vec c(m); // unnormalized (pibar, beta^k)
        for (int j = 0; j < m; ++j)
            c[j] = quadrature(traj.grid,
                              coeffs.beta.col(j).cwiseProduct(state.pibar.values));
        const Vec Btrue = spec.B(t, path.z.row(k).transpose());
        const Mat Th = spec.Theta(t, y);
        rhs += c.dot(coeffs.psi * Btrue) * path.dt +
               c.dot(coeffs.psi * Th * path.w.row(k).transpose());
        sup = std::max(sup, std::abs(traj.mass[k + 1] - rhs));
    }
    return sup;
}

/// Innovation increments dw_check = Psi dy - P[beta] dt.
inline Eigen::MatrixXd innovation_path(const FilterTrajectory& traj,
                                       const PathSample& path,
                                       const SystemSpec& spec) {
    const int n = traj.steps();
    const int m = spec.obs_dim();
    Eigen::MatrixXd out(n, m);
    for (int k = 0; k < n; ++k) {
        const Mat Psi = compute_psi(spec, traj.times[k], path.y_at(k, spec.d));
        out.row(k) = (Psi * path.dy(k, spec.d)).transpose() -
                     path.dt * traj.p_beta.row(k);
    }
    return out;
}

/// Wiener-property statistics of an increment array: relative max deviation
/// of the quadratic variation from T*I, and the normalized endpoint |z|.
inline std::pair<double, double> innovation_tests(
    const Eigen::MatrixXd& increments, double dt) {
    const int n = static_cast<int>(increments.rows());
    if (n < 100)
        throw ConfigError("innovation_tests: need at least 100 increments");
    const int m = static_cast<int>(increments.cols());
    const double T = n * dt;
    const Mat qv = increments.transpose() * increments;
    const double qv_error =
        (qv - T * Mat::Identity(m, m)).cwiseAbs().maxCoeff() / T;
    const double mean_z =
        increments.colwise().sum().norm() / std::sqrt(T * m);
    return {qv_error, mean_z};
}

/// sup_t | log(pibar_t,1) - (sum P dw_check + 1/2 sum |P|^2 dt) |.
inline double exponential_mass_residual(const FilterTrajectory& traj,
                                        const Eigen::MatrixXd& innovation,
                                        double dt) {
    const int n = traj.steps();
    double acc = std::log(traj.mass[0]);
    double sup = 0.0;
    for (int k = 0; k < n; ++k) {
        if (traj.mass[k + 1] <= 0.0)
            throw MassCollapseError("exponential_mass_residual: nonpositive mass");
        const Vec P = traj.p_beta.row(k).transpose();
        acc += P.dot(innovation.row(k).transpose()) + 0.5 * P.squaredNorm() * dt;
        sup = std::max(sup, std::abs(std::log(traj.mass[k + 1]) - acc));
    }
    return sup;
}

struct HolderFit {
    double alpha_t = 0.0;
    double alpha_x = 0.0;
    bool degenerate_t = false;
    bool degenerate_x = false;
};

namespace detail {

inline double loglog_slope(const std::vector<double>& lags,
                           const std::vector<double>& sups, bool& degenerate) {
    for (double s : sups) {
        if (s <= 0.0) {
            degenerate = true;
            return 1.5; // exponent cap, flagged
        }
    }
    const int L = static_cast<int>(lags.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < L; ++i) {
        const double x = std::log(lags[i]);
        const double y = std::log(sups[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double slope = (L * sxy - sx * sy) / (L * sxx - sx * sx);
    degenerate = false;
    return std::min(std::max(slope, 0.0), 1.5);
}

} // namespace detail

/// Fits Holder exponents from sup-increment statistics over dyadic lags
/// (levels 1..5). The t-statistic is taken over the second half of the
/// horizon, past the initial-layer smoothing; the x-statistic over all times.
inline HolderFit holder_exponents_from(const Eigen::MatrixXd& history,
                                       double dt, double h,
                                       int levels = 5) {
    const int n = static_cast<int>(history.rows()) - 1;
    const int N = static_cast<int>(history.cols());
    const int max_lag = 1 << (levels - 1);
    if (levels < 4 || n / 2 < max_lag || N - 1 < max_lag)
        throw InsufficientResolution(
            "holder_exponents: fewer than 4 usable dyadic lag levels");

    HolderFit fit;
    {
        std::vector<double> lags(levels), sups(levels);
        const int k0 = n / 2;
        for (int l = 0; l < levels; ++l) {
            const int lag = 1 << l;
            lags[l] = lag * dt;
            double s = 0.0;
            for (int k = k0; k + lag <= n; ++k)
                s = std::max(
                    s, (history.row(k + lag) - history.row(k)).cwiseAbs().maxCoeff());
            sups[l] = s;
        }
        fit.alpha_t = detail::loglog_slope(lags, sups, fit.degenerate_t);
    }
    {
        std::vector<double> lags(levels), sups(levels);
        for (int l = 0; l < levels; ++l) {
            const int lag = 1 << l;
            lags[l] = lag * h;
            double s = 0.0;
            for (int k = 0; k <= n; ++k)
                for (int j = 0; j + lag < N; ++j)
                    s = std::max(s,
                                 std::abs(history(k, j + lag) - history(k, j)));
            sups[l] = s;
        }
        fit.alpha_x = detail::loglog_slope(lags, sups, fit.degenerate_x);
    }
    return fit;
}

inline HolderFit holder_exponents(const FilterTrajectory& traj,
                                  int levels = 5) {
    if (traj.grid.d != 1)
        throw ConfigError("holder_exponents: x-lag scan implemented for d = 1");
    if (traj.history.size() == 0)
        throw ConfigError("holder_exponents: trajectory history not stored");
    return holder_exponents_from(traj.history, traj.dt, traj.grid.h, levels);
}

/// Discrete W^1_p proxy norm: (sum |u|^p h^d)^{1/p} + (sum |grad_h u|^p h^d)^{1/p}
/// with centered gradients (one-sided at edges).
inline double sobolev_norm(const FilterState& state, const GridSpec& grid,
                           double p) {
    if (p < 2.0) throw ConfigError("sobolev_norm: p must be >= 2");
    const Eigen::VectorXd& u = state.pibar.values;
    const double hd = std::pow(grid.h, grid.d);
    double lp = 0.0, gp = 0.0;
    for (std::int64_t f = 0; f < grid.size(); ++f) {
        lp += std::pow(std::abs(u[f]), p) * hd;
        double g2 = 0.0;
        const auto idx = grid.unflat(f);
        for (int a = 0; a < grid.d; ++a) {
            const std::int64_t s = grid.stride(a);
            double du;
            if (idx[a] == 0)
                du = (u[f + s] - u[f]) / grid.h;
            else if (idx[a] == grid.nodes[a] - 1)
                du = (u[f] - u[f - s]) / grid.h;
            else
                du = (u[f + s] - u[f - s]) / (2.0 * grid.h);
            g2 += du * du;
        }
        gp += std::pow(std::sqrt(g2), p) * hd;
    }
    return std::pow(lp, 1.0 / p) + std::pow(gp, 1.0 / p);
}

/// Every structural identity of the trajectory, as numbers.
struct DiagnosticsReport {
    double mass_residual_sup = 0.0;
    double exp_mass_residual_sup = 0.0;
    double innovation_qv_error = 0.0;
    double innovation_mean_z = 0.0;
    double holder_t_exponent = 0.0;
    double holder_x_exponent = 0.0;
    bool holder_t_degenerate = false;
    bool holder_x_degenerate = false;
    double min_density_ratio = 0.0; // most negative min/sup over the run
    std::vector<double> w12_norm_series;
    std::vector<double> w14_norm_series;
    bool raw_wiener_available = true; // mass SDE needs the simulator's w
};

inline DiagnosticsReport compute_report(const FilterTrajectory& traj,
                                        const PathSample& path,
                                        const SystemSpec& spec,
                                        bool with_holder = true) {
    DiagnosticsReport rep;
    rep.mass_residual_sup = mass_identity_residual(traj, path, spec);
    const Eigen::MatrixXd innov = innovation_path(traj, path, spec);
    const auto [qv, mz] = innovation_tests(innov, path.dt);
    rep.innovation_qv_error = qv;
    rep.innovation_mean_z = mz;
    rep.exp_mass_residual_sup =
        exponential_mass_residual(traj, innov, path.dt);

    double ratio = 0.0;
    for (int k = 0; k <= traj.steps(); ++k)
        if (traj.max_value[k] > 0.0)
            ratio = std::min(ratio, traj.min_value[k] / traj.max_value[k]);
    rep.min_density_ratio = ratio;

    if (with_holder) {
        const HolderFit fit = holder_exponents(traj);
        rep.holder_t_exponent = fit.alpha_t;
        rep.holder_x_exponent = fit.alpha_x;
        rep.holder_t_degenerate = fit.degenerate_t;
        rep.holder_x_degenerate = fit.degenerate_x;
    }

    for (int k = 0; k <= traj.steps(); ++k) {
        const FilterState st = traj.state_at(k);
        rep.w12_norm_series.push_back(sobolev_norm(st, traj.grid, 2.0));
        rep.w14_norm_series.push_back(sobolev_norm(st, traj.grid, 4.0));
    }
    return rep;
}

} // namespace zakai
