#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cmath>
#include <vector>

#include "zakai/errors.hpp"
#include "zakai/grid.hpp"
#include "zakai/model.hpp"

namespace zakai {

using SparseOp = Eigen::SparseMatrix<double>;

namespace detail {

/// Bernoulli function z / (e^z - 1), stable near zero.
inline double bernoulli_fn(double z) {
    if (std::abs(z) < 1e-8) return 1.0 - 0.5 * z + z * z / 12.0;
    return z / std::expm1(z);
}

} // namespace detail

/// Divergence-form operator L* in flux form with zero-flux box boundaries.
///
/// Per face normal to axis j the normal flux a^{jj} D_j u + c^j u with
/// c = div_a - b is discretized by Scharfetter-Gummel exponential fitting:
/// second order for smooth fields, and limiting to the correct upwind side
/// as the face Peclet number grows, which keeps the implicit step an
/// M-matrix. Cross terms a^{ij} (i != j) use face-averaged centered D_i u.
/// Rows telescope, so the operator annihilates total (midpoint) mass.
inline SparseOp assemble_deterministic_operator(
    const ConditionedCoefficients& coeffs, const GridSpec& grid) {
    if (!grid.same_as(coeffs.grid))
        throw GridMismatch("assemble_deterministic_operator: grid mismatch");
    const int d = coeffs.d();
    const std::int64_t N = grid.size();
    const double h = grid.h;

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(N) * (3 + 4 * (d - 1)) * d);
    auto add = [&](std::int64_t r, std::int64_t c, double v) {
        trip.emplace_back(static_cast<int>(r), static_cast<int>(c), v);
    };

    std::vector<int> idx(d);
    Mat a_face(d, d);
    for (std::int64_t f = 0; f < N; ++f) {
        idx = grid.unflat(f);
        for (int j = 0; j < d; ++j) {
            if (idx[j] == grid.nodes[j] - 1) continue; // no face beyond the box
            const std::int64_t s = grid.stride(j);
            const std::int64_t g = f + s; // upper neighbor across the face

            for (int i = 0; i < d; ++i)
                for (int jj = 0; jj < d; ++jj)
                    a_face(i, jj) =
                        0.5 * (coeffs.a(f, i * d + jj) + coeffs.a(g, i * d + jj));
            if (d == 1) {
                if (a_face(0, 0) <= 0.0)
                    throw AssemblyError("face-averaged a not positive definite");
            } else if (Eigen::SelfAdjointEigenSolver<Mat>(a_face)
                           .eigenvalues()
                           .minCoeff() <= 0.0) {
                throw AssemblyError("face-averaged a not positive definite");
            }

            // The face contributes +flux/h to node f, -flux/h to node g.
            auto add_flux = [&](std::int64_t c, double v) {
                add(f, c, v / h);
                add(g, c, -v / h);
            };

            // Normal flux a^{jj} D_j u + c^j u via Scharfetter-Gummel:
            // F = (a/h) [B(-lam) u_g - B(lam) u_f], lam = c h / a.
            const double cf = 0.5 * (coeffs.div_a(f, j) - coeffs.b_vec(f, j) +
                                     coeffs.div_a(g, j) - coeffs.b_vec(g, j));
            const double ajj = a_face(j, j);
            const double lam = cf * h / ajj;
            add_flux(g, ajj * detail::bernoulli_fn(-lam) / h);
            add_flux(f, -ajj * detail::bernoulli_fn(lam) / h);

            // cross terms: a^{ij} D_i u averaged over the two cells
            for (int i = 0; i < d; ++i) {
                if (i == j) continue;
                const double aij = a_face(i, j);
                if (aij == 0.0) continue;
                const std::int64_t si = grid.stride(i);
                for (std::int64_t cell : {f, g}) {
                    const int ia = grid.unflat(cell)[i];
                    if (ia == 0) {
                        add_flux(cell + si, 0.5 * aij / h);
                        add_flux(cell, -0.5 * aij / h);
                    } else if (ia == grid.nodes[i] - 1) {
                        add_flux(cell, 0.5 * aij / h);
                        add_flux(cell - si, -0.5 * aij / h);
                    } else {
                        add_flux(cell + si, 0.25 * aij / h);
                        add_flux(cell - si, -0.25 * aij / h);
                    }
                }
            }
        }
    }

    SparseOp op(static_cast<int>(N), static_cast<int>(N));
    op.setFromTriplets(trip.begin(), trip.end());
    return op;
}

/// Stochastic-channel operator Lambda^{k*} u = -sigma^{ik} D_i u
/// + (beta^k - D_i sigma^{ik}) u, centered differences, one-sided at edges.
inline SparseOp assemble_stochastic_operator(
    const ConditionedCoefficients& coeffs, const GridSpec& grid, int k) {
    if (!grid.same_as(coeffs.grid))
        throw GridMismatch("assemble_stochastic_operator: grid mismatch");
    if (k < 0 || k >= coeffs.m())
        throw ConfigError("assemble_stochastic_operator: channel out of range");
    const int d = coeffs.d();
    const int m = coeffs.m();
    const std::int64_t N = grid.size();
    const double h = grid.h;

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(N) * (1 + 2 * d));
    for (std::int64_t f = 0; f < N; ++f) {
        trip.emplace_back(static_cast<int>(f), static_cast<int>(f),
                          coeffs.beta(f, k) - coeffs.div_sigma(f, k));
        const auto idx = grid.unflat(f);
        for (int i = 0; i < d; ++i) {
            const double sik = coeffs.sigma(f, i * m + k);
            if (sik == 0.0) continue;
            const std::int64_t s = grid.stride(i);
            if (idx[i] == 0) {
                trip.emplace_back(static_cast<int>(f), static_cast<int>(f + s),
                                  -sik / h);
                trip.emplace_back(static_cast<int>(f), static_cast<int>(f),
                                  sik / h);
            } else if (idx[i] == grid.nodes[i] - 1) {
                trip.emplace_back(static_cast<int>(f), static_cast<int>(f),
                                  -sik / h);
                trip.emplace_back(static_cast<int>(f), static_cast<int>(f - s),
                                  sik / h);
            } else {
                trip.emplace_back(static_cast<int>(f), static_cast<int>(f + s),
                                  -sik / (2.0 * h));
                trip.emplace_back(static_cast<int>(f), static_cast<int>(f - s),
                                  sik / (2.0 * h));
            }
        }
    }

    SparseOp op(static_cast<int>(N), static_cast<int>(N));
    op.setFromTriplets(trip.begin(), trip.end());
    return op;
}

} // namespace zakai
