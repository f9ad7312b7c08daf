#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "zakai/errors.hpp"
#include "zakai/grid.hpp"
#include "zakai/particle.hpp"

namespace zakai {

/// L1 distance by trapezoid quadrature of |A - B|.
inline double density_distance(const DensityField& a, const DensityField& b,
                               const GridSpec& grid) {
    if (a.values.size() != grid.size() || b.values.size() != grid.size())
        throw GridMismatch("density_distance: fields on different grids");
    return quadrature(grid, (a.values - b.values).cwiseAbs());
}

/// Silverman bandwidth for a weighted 1-d sample: 1.06 * sigma * Neff^{-1/5}.
inline double silverman_bandwidth(const ParticleEnsemble& ens) {
    const Vec w = ens.log_weights.array().exp();
    const double mean = w.dot(ens.positions.col(0));
    const Vec c = ens.positions.col(0).array() - mean;
    const double var = w.dot(c.cwiseProduct(c));
    const double neff = 1.0 / w.squaredNorm();
    return 1.06 * std::sqrt(std::max(var, 1e-300)) * std::pow(neff, -0.2);
}

/// Gaussian-kernel density estimate of a weighted ensemble on the grid
/// (d = 1). Particles are deposited onto the grid by linear interpolation
/// and the histogram convolved with a discretized kernel; the result is
/// renormalized to unit trapezoid mass.
inline DensityField kde_density(const ParticleEnsemble& ens,
                                const GridSpec& grid,
                                double bandwidth = 0.0) {
    if (grid.d != 1)
        throw ConfigError("kde_density: implemented for d = 1 grids");
    const double bw = bandwidth > 0.0 ? bandwidth : silverman_bandwidth(ens);
    const std::int64_t N = grid.size();
    const Vec w = ens.log_weights.array().exp();

    Eigen::VectorXd hist = Eigen::VectorXd::Zero(N);
    for (int i = 0; i < ens.positions.rows(); ++i) {
        const double u = (ens.positions(i, 0) + grid.R) / grid.h;
        const std::int64_t j = static_cast<std::int64_t>(std::floor(u));
        if (j < 0 || j >= N - 1) continue; // outside the box
        const double frac = u - static_cast<double>(j);
        hist[j] += w[i] * (1.0 - frac);
        hist[j + 1] += w[i] * frac;
    }

    const int half = static_cast<int>(std::ceil(5.0 * bw / grid.h));
    Eigen::VectorXd kernel(2 * half + 1);
    for (int j = -half; j <= half; ++j)
        kernel[j + half] = std::exp(-0.5 * (j * grid.h) * (j * grid.h) / (bw * bw));

    Eigen::VectorXd out = Eigen::VectorXd::Zero(N);
    for (std::int64_t c = 0; c < N; ++c) {
        if (hist[c] == 0.0) continue;
        const std::int64_t lo = std::max<std::int64_t>(0, c - half);
        const std::int64_t hi = std::min<std::int64_t>(N - 1, c + half);
        for (std::int64_t j = lo; j <= hi; ++j)
            out[j] += hist[c] * kernel[j - c + half];
    }
    const double mass = quadrature(grid, out);
    if (mass <= 0.0)
        throw DegeneracyError("kde_density: no particle mass inside the grid");
    return DensityField(grid, out / mass);
}

} // namespace zakai
