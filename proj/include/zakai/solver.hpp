#pragma once

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <functional>
#include <string>
#include <vector>

#include "zakai/errors.hpp"
#include "zakai/grid.hpp"
#include "zakai/model.hpp"
#include "zakai/operators.hpp"
#include "zakai/sde.hpp"
#include "zakai/system.hpp"

namespace zakai {

struct FilterState {
    double t = 0.0;
    DensityField pibar;
    DensityField normalized;

    FilterState() = default;
    FilterState(const GridSpec& grid, double time, Eigen::VectorXd values)
        : t(time), pibar(grid, std::move(values)) {
        if (pibar.mass < 1e-12)
            throw MassCollapseError("FilterState: total mass below 1e-12");
        normalized = DensityField(grid, pibar.values / pibar.mass);
    }
};

struct SolveOptions {
    bool crank_nicolson = false; // default backward Euler
    bool store_history = true;
    double solve_tolerance = 1e-10;
    int solve_max_iterations = 5000;
};

/// Time-indexed output of a Zakai solve plus per-step diagnostic streams.
struct FilterTrajectory {
    GridSpec grid;
    double dt = 0.0;
    Vec times;              // n + 1
    Vec mass;               // (pibar_t, 1) per mesh point
    Vec min_value;          // min over the grid per mesh point
    Vec max_value;          // max over the grid per mesh point
    Eigen::MatrixXd p_beta; // (n + 1) x m, conditional mean of beta
    Eigen::MatrixXd history; // (n + 1) x N pibar values (empty if not stored)
    FilterState final_state;

    int steps() const { return static_cast<int>(times.size()) - 1; }

    FilterState state_at(int k) const {
        if (history.size() == 0)
            throw ConfigError("FilterTrajectory: history was not stored");
        return FilterState(grid, times[k], history.row(k).transpose());
    }
};

/// One splitting step: explicit stochastic substep with dw_hat = Psi dy,
/// then an implicit deterministic substep.
inline FilterState step(const FilterState& state, double dt, const Vec& dy,
                        const ConditionedCoefficients& coeffs,
                        const SolveOptions& opts = {}) {
    const GridSpec& grid = coeffs.grid;
    const Vec dw_hat = coeffs.psi * dy;
    const int m = coeffs.m();

    Eigen::VectorXd v = state.pibar.values;
    for (int k = 0; k < m; ++k) {
        if (dw_hat[k] == 0.0) continue;
        const SparseOp lam = assemble_stochastic_operator(coeffs, grid, k);
        v += dw_hat[k] * (lam * state.pibar.values);
    }

    const SparseOp L = assemble_deterministic_operator(coeffs, grid);
    SparseOp I(static_cast<int>(grid.size()), static_cast<int>(grid.size()));
    I.setIdentity();
    const double theta_impl = opts.crank_nicolson ? 0.5 : 1.0;
    SparseOp A = I - (theta_impl * dt) * L;
    if (opts.crank_nicolson) v += (0.5 * dt) * (L * v);

    Eigen::BiCGSTAB<SparseOp, Eigen::IncompleteLUT<double>> solver;
    solver.setTolerance(opts.solve_tolerance);
    solver.setMaxIterations(opts.solve_max_iterations);
    solver.compute(A);
    if (solver.info() != Eigen::Success)
        throw LinearSolveError("step: implicit operator factorization failed");
    const Eigen::VectorXd u = solver.solveWithGuess(v, v);
    if (solver.info() != Eigen::Success)
        throw LinearSolveError("step: implicit solve did not converge");

    return FilterState(grid, state.t + dt, u);
}

/// Quadrature ratio (pibar, f) / (pibar, 1).
inline double conditional_expectation(const FilterState& state,
                                      const GridSpec& grid,
                                      const Eigen::VectorXd& f_values) {
    if (state.pibar.mass < 1e-12)
        throw MassCollapseError("conditional_expectation: mass below 1e-12");
    return quadrature(grid, f_values.cwiseProduct(state.pibar.values)) /
           state.pibar.mass;
}

namespace detail {

inline Vec p_beta_of(const FilterState& state,
                     const ConditionedCoefficients& coeffs) {
    Vec out(coeffs.m());
    for (int k = 0; k < coeffs.m(); ++k)
        out[k] = quadrature(coeffs.grid,
                            coeffs.beta.col(k).cwiseProduct(state.pibar.values)) /
                 state.pibar.mass;
    return out;
}

} // namespace detail

/// Advances the unnormalized density along the observation increments of a
/// simulated path. Initial mass is normalized to (pi_0, 1) = 1.
inline FilterTrajectory solve_zakai(const SystemSpec& spec,
                                    const PathSample& path,
                                    const GridSpec& grid,
                                    const SolveOptions& opts = {}) {
    const int n = path.steps();
    const std::int64_t N = grid.size();
    const int m = spec.obs_dim();

    Eigen::VectorXd u0(N);
    for (std::int64_t f = 0; f < N; ++f)
        u0[f] = spec.pi0.pdf(grid.node_coords(f));
    const double mass0 = quadrature(grid, u0);
    if (mass0 <= 0.0)
        throw MassCollapseError("solve_zakai: initial density has no mass on the grid");
    u0 /= mass0;

    FilterTrajectory traj;
    traj.grid = grid;
    traj.dt = path.dt;
    traj.times = path.times;
    traj.mass.resize(n + 1);
    traj.min_value.resize(n + 1);
    traj.max_value.resize(n + 1);
    traj.p_beta.resize(n + 1, m);
    if (opts.store_history) traj.history.resize(n + 1, N);

    FilterState state(grid, 0.0, u0);
    for (int k = 0; k <= n; ++k) {
        const double t = path.times[k];
        const Vec y = path.y_at(k, spec.d);
        const ConditionedCoefficients coeffs =
            condition_coefficients(spec, t, y, grid);

        traj.mass[k] = state.pibar.mass;
        traj.min_value[k] = state.pibar.min_value;
        traj.max_value[k] = state.pibar.values.maxCoeff();
        traj.p_beta.row(k) = detail::p_beta_of(state, coeffs).transpose();
        if (opts.store_history) traj.history.row(k) = state.pibar.values.transpose();

        if (state.pibar.mass < 1e-12)
            throw MassCollapseError("solve_zakai: mass collapsed at t = " +
                                    std::to_string(t));
        if (k < n) state = step(state, path.dt, path.dy(k, spec.d), coeffs, opts);
    }
    traj.final_state = state;
    return traj;
}

} // namespace zakai
