#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "zakai/errors.hpp"

namespace zakai {

/// Uniform tensor grid on [-R, R]^d. Node j along an axis sits at -R + j*h.
struct GridSpec {
    int d = 1;
    double R = 1.0;
    double h = 0.1;
    std::vector<int> nodes; // per axis, derived from R and h

    GridSpec() = default;
    GridSpec(int dim, double halfwidth, double spacing)
        : d(dim), R(halfwidth), h(spacing) {
        if (d < 1 || d > 3)
            throw ConfigError("GridSpec: d must be 1, 2, or 3");
        if (h <= 0.0)
            throw ConfigError("GridSpec: h must be positive");
        const int n = static_cast<int>(std::lround(2.0 * R / h)) + 1;
        if (n < 8)
            throw ConfigError("GridSpec: fewer than 8 nodes per axis");
        nodes.assign(d, n);
    }

    int nodes_per_axis() const { return nodes[0]; }

    std::int64_t size() const {
        std::int64_t s = 1;
        for (int n : nodes) s *= n;
        return s;
    }

    double coord(int axis_index) const { return -R + h * axis_index; }

    /// Flat index from per-axis indices (row-major, axis 0 slowest).
    std::int64_t flat(const std::vector<int>& idx) const {
        std::int64_t f = 0;
        for (int a = 0; a < d; ++a) f = f * nodes[a] + idx[a];
        return f;
    }

    std::vector<int> unflat(std::int64_t f) const {
        std::vector<int> idx(d);
        for (int a = d - 1; a >= 0; --a) {
            idx[a] = static_cast<int>(f % nodes[a]);
            f /= nodes[a];
        }
        return idx;
    }

    std::int64_t stride(int axis) const {
        std::int64_t s = 1;
        for (int a = axis + 1; a < d; ++a) s *= nodes[a];
        return s;
    }

    Eigen::VectorXd node_coords(std::int64_t f) const {
        Eigen::VectorXd x(d);
        auto idx = unflat(f);
        for (int a = 0; a < d; ++a) x[a] = coord(idx[a]);
        return x;
    }

    /// Trapezoid quadrature weight of the flat node (product of per-axis weights).
    double quad_weight(std::int64_t f) const {
        double w = 1.0;
        auto idx = unflat(f);
        for (int a = 0; a < d; ++a) {
            w *= (idx[a] == 0 || idx[a] == nodes[a] - 1) ? 0.5 * h : h;
        }
        return w;
    }

    bool same_as(const GridSpec& o) const {
        return d == o.d && R == o.R && h == o.h && nodes == o.nodes;
    }
};

/// Trapezoid quadrature of a grid array.
inline double quadrature(const GridSpec& grid, const Eigen::VectorXd& values) {
    if (values.size() != grid.size())
        throw GridMismatch("quadrature: value array does not match grid");
    if (grid.d == 1) {
        const std::int64_t n = grid.size();
        double s = values.sum() - 0.5 * (values[0] + values[n - 1]);
        return s * grid.h;
    }
    double s = 0.0;
    for (std::int64_t f = 0; f < grid.size(); ++f)
        s += grid.quad_weight(f) * values[f];
    return s;
}

/// Values of a scalar field on the grid with cached mass and minimum.
struct DensityField {
    Eigen::VectorXd values;
    double mass = 0.0;
    double min_value = 0.0;

    DensityField() = default;
    DensityField(const GridSpec& grid, Eigen::VectorXd v) : values(std::move(v)) {
        if (values.size() != grid.size())
            throw GridMismatch("DensityField: value array does not match grid");
        mass = quadrature(grid, values);
        min_value = values.minCoeff();
    }
};

} // namespace zakai
