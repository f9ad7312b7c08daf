#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "zakai/operators.hpp"

using namespace zakai;

namespace {

// 1-d system with prescribed scalar coefficients; observation noise is the
// second Wiener column so that Psi = 1.
SystemSpec scalar_system(std::function<double(double)> a_of_x,
                         std::function<double(double)> b_of_x,
                         double sigma_cross = 0.0, double beta_lin = 0.0) {
    SystemSpec s;
    s.d = 1;
    s.d1 = 2;
    s.d2 = 2;
    s.pi0 = InitialDensity::gaussian(Vec::Zero(1), 1.0);
    s.y0 = Vec::Zero(1);
    s.b = [=](double, const Vec& z) {
        return Vec::Constant(1, b_of_x(z[0]));
    };
    s.theta = [=](double, const Vec& z) {
        Mat th(1, 2);
        // a = theta theta^T / 2, so the signal column carries the rest
        const double target = 2.0 * a_of_x(z[0]) - sigma_cross * sigma_cross;
        th(0, 0) = std::sqrt(std::max(target, 0.0));
        th(0, 1) = sigma_cross;
        return th;
    };
    s.B = [=](double, const Vec& z) { return Vec::Constant(1, beta_lin * z[0]); };
    s.Theta = [](double, const Vec&) {
        Mat Th(1, 2);
        Th << 0.0, 1.0;
        return Th;
    };
    return s;
}

} // namespace

TEST_CASE("unit diffusion yields the classical three-point stencil") {
    GridSpec grid(1, 2.0, 0.25);
    auto spec = scalar_system([](double) { return 1.0; },
                              [](double) { return 0.0; });
    auto cc = condition_coefficients(spec, 0.0, Vec::Zero(1), grid);
    auto op = assemble_deterministic_operator(cc, grid);

    const double ih2 = 1.0 / (0.25 * 0.25);
    Eigen::MatrixXd dense = Eigen::MatrixXd(op);
    const auto n = grid.size();
    for (std::int64_t j = 1; j + 1 < n; ++j) {
        CHECK(dense(j, j - 1) == Catch::Approx(ih2).margin(1e-12));
        CHECK(dense(j, j) == Catch::Approx(-2.0 * ih2).margin(1e-12));
        CHECK(dense(j, j + 1) == Catch::Approx(ih2).margin(1e-12));
    }
    // zero-flux closure at the box edges
    CHECK(dense(0, 0) == Catch::Approx(-ih2).margin(1e-12));
    CHECK(dense(0, 1) == Catch::Approx(ih2).margin(1e-12));
}

TEST_CASE("column sums vanish: the operator conserves discrete mass") {
    GridSpec grid(1, 3.0, 0.1);
    auto spec = scalar_system(
        [](double x) { return 1.0 + 0.3 * std::sin(x); },
        [](double x) { return 0.5 * std::cos(x) - 0.2 * x; });
    auto cc = condition_coefficients(spec, 0.0, Vec::Zero(1), grid);
    auto op = assemble_deterministic_operator(cc, grid);
    const Vec colsum = Eigen::RowVectorXd::Ones(op.rows()) * op;
    CHECK(colsum.cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("action on constants matches a'' when b vanishes") {
    // L* 1 = D(D a) for b = 0; with constant a that is exactly zero
    GridSpec grid(1, 3.0, 0.05);
    const Vec r2 = assemble_deterministic_operator(
                       condition_coefficients(
                           scalar_system([](double) { return 1.0; },
                                         [](double) { return 0.0; }),
                           0.0, Vec::Zero(1), grid),
                       grid) *
                   Vec::Ones(grid.size());
    CHECK(r2.cwiseAbs().maxCoeff() < 1e-12);

    auto spec = scalar_system(
        [](double x) { return 1.0 + 0.2 * std::cos(x); },
        [](double) { return 0.0; });
    auto cc = condition_coefficients(spec, 0.0, Vec::Zero(1), grid);
    const Vec r = assemble_deterministic_operator(cc, grid) *
                  Vec::Ones(grid.size());
    for (std::int64_t f = 2; f + 2 < grid.size(); ++f) {
        const double x = grid.node_coords(f)[0];
        CHECK(r[f] == Catch::Approx(-0.2 * std::cos(x)).margin(2e-3));
    }
}

TEST_CASE("flux-form operator is second-order accurate on smooth fields") {
    // a(x) = 1 + 0.1 sin x, b(x) = 0.3 cos x, u = exp(-x^2/2):
    // L*u = a u'' + (2a' - b) u' + (a'' - b') u
    auto spec = scalar_system(
        [](double x) { return 1.0 + 0.1 * std::sin(x); },
        [](double x) { return 0.3 * std::cos(x); });
    auto exact = [](double x) {
        const double u = std::exp(-0.5 * x * x);
        const double a = 1.0 + 0.1 * std::sin(x);
        const double ap = 0.1 * std::cos(x);
        const double app = -0.1 * std::sin(x);
        const double b = 0.3 * std::cos(x);
        const double bp = -0.3 * std::sin(x);
        const double up = -x * u;
        const double upp = (x * x - 1.0) * u;
        return a * upp + (2.0 * ap - b) * up + (app - bp) * u;
    };

    std::vector<double> errs;
    for (double h : {0.1, 0.05, 0.025}) {
        GridSpec grid(1, 5.0, h);
        auto cc = condition_coefficients(spec, 0.0, Vec::Zero(1), grid);
        auto op = assemble_deterministic_operator(cc, grid);
        Vec u(grid.size());
        for (std::int64_t f = 0; f < grid.size(); ++f) {
            const double x = grid.node_coords(f)[0];
            u[f] = std::exp(-0.5 * x * x);
        }
        const Vec Lu = op * u;
        double err = 0.0;
        for (std::int64_t f = 0; f < grid.size(); ++f) {
            const double x = grid.node_coords(f)[0];
            if (std::abs(x) > 3.0) continue; // stay away from the box edges
            err = std::max(err, std::abs(Lu[f] - exact(x)));
        }
        errs.push_back(err);
    }
    const double rate1 = std::log2(errs[0] / errs[1]);
    const double rate2 = std::log2(errs[1] / errs[2]);
    INFO("errors " << errs[0] << " " << errs[1] << " " << errs[2]);
    CHECK(rate1 > 1.8);
    CHECK(rate2 > 1.8);
}

TEST_CASE("implicit-step matrix keeps the M-matrix sign pattern") {
    // advection-dominated: strong drift against modest diffusion
    auto spec = scalar_system([](double) { return 0.05; },
                              [](double x) { return 5.0 - 2.0 * x; });
    GridSpec grid(1, 3.0, 0.2);
    auto cc = condition_coefficients(spec, 0.0, Vec::Zero(1), grid);
    auto op = assemble_deterministic_operator(cc, grid);
    for (int k = 0; k < op.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(op, k); it; ++it)
            if (it.row() != it.col()) CHECK(it.value() >= -1e-14);
}

TEST_CASE("stochastic operator is multiplication when sigma vanishes") {
    auto spec = scalar_system([](double) { return 0.5; },
                              [](double) { return 0.0; }, 0.0, 1.0);
    GridSpec grid(1, 2.0, 0.25);
    auto cc = condition_coefficients(spec, 0.0, Vec::Zero(1), grid);
    auto op = assemble_stochastic_operator(cc, grid, 0);
    Eigen::MatrixXd dense = Eigen::MatrixXd(op);
    for (std::int64_t j = 0; j < grid.size(); ++j) {
        const double x = grid.node_coords(j)[0];
        CHECK(dense(j, j) == Catch::Approx(x).margin(1e-12)); // beta(x) = x
        for (std::int64_t c = 0; c < grid.size(); ++c)
            if (c != j) CHECK(dense(j, c) == 0.0);
    }
}

TEST_CASE("stochastic operator applies -sigma d/dx at second order") {
    const double s = 0.4;
    auto spec = scalar_system([](double) { return 0.5; },
                              [](double) { return 0.0; }, s, 0.0);
    std::vector<double> errs;
    for (double h : {0.1, 0.05}) {
        GridSpec grid(1, 4.0, h);
        auto cc = condition_coefficients(spec, 0.0, Vec::Zero(1), grid);
        auto op = assemble_stochastic_operator(cc, grid, 0);
        Vec u(grid.size());
        for (std::int64_t f = 0; f < grid.size(); ++f)
            u[f] = std::sin(grid.node_coords(f)[0]);
        const Vec Lu = op * u;
        double err = 0.0;
        for (std::int64_t f = 1; f + 1 < grid.size(); ++f) {
            const double x = grid.node_coords(f)[0];
            err = std::max(err, std::abs(Lu[f] + s * std::cos(x)));
        }
        errs.push_back(err);
    }
    CHECK(std::log2(errs[0] / errs[1]) > 1.8);
}

TEST_CASE("degenerate diffusion is rejected at assembly") {
    SystemSpec s;
    s.d = 1;
    s.d1 = 2;
    s.d2 = 2;
    s.pi0 = InitialDensity::gaussian(Vec::Zero(1), 1.0);
    s.y0 = Vec::Zero(1);
    s.b = [](double, const Vec&) { return Vec::Zero(1); };
    s.theta = [](double, const Vec&) { return Mat::Zero(1, 2); };
    s.B = [](double, const Vec&) { return Vec::Zero(1); };
    s.Theta = [](double, const Vec&) {
        Mat Th(1, 2);
        Th << 0.0, 1.0;
        return Th;
    };
    GridSpec grid(1, 2.0, 0.25);
    auto cc = condition_coefficients(s, 0.0, Vec::Zero(1), grid);
    CHECK_THROWS_AS(assemble_deterministic_operator(cc, grid), AssemblyError);
}

TEST_CASE("grid mismatch is detected") {
    auto spec = scalar_system([](double) { return 1.0; },
                              [](double) { return 0.0; });
    GridSpec grid(1, 2.0, 0.25);
    GridSpec other(1, 2.0, 0.125);
    auto cc = condition_coefficients(spec, 0.0, Vec::Zero(1), grid);
    CHECK_THROWS_AS(assemble_deterministic_operator(cc, other), GridMismatch);
    CHECK_THROWS_AS(assemble_stochastic_operator(cc, other, 0), GridMismatch);
    CHECK_THROWS_AS(assemble_stochastic_operator(cc, grid, 5), ConfigError);
}

TEST_CASE("two-dimensional cross terms reproduce a rotated Gaussian flow") {
    // theta = [[1, r, 0], [r, 1, 0]] / norm gives off-diagonal a; b = 0.
    // Oracle: L*u for u = exp(-|x|^2/2) with constant a is
    // sum_ij a_ij (x_i x_j - delta_ij) u.
    const double r = 0.5;
    SystemSpec s;
    s.d = 2;
    s.d1 = 3;
    s.d2 = 3;
    s.pi0 = InitialDensity::gaussian(Vec::Zero(2), 1.0);
    s.y0 = Vec::Zero(1);
    s.b = [](double, const Vec&) { return Vec::Zero(2); };
    s.theta = [=](double, const Vec&) {
        Mat th(2, 3);
        th << 1.0, r, 0.0, r, 1.0, 0.0;
        return th;
    };
    s.B = [](double, const Vec&) { return Vec::Zero(1); };
    s.Theta = [](double, const Vec&) {
        Mat Th(1, 3);
        Th << 0.0, 0.0, 1.0;
        return Th;
    };

    Mat a(2, 2);
    a << 0.5 * (1 + r * r), r, r, 0.5 * (1 + r * r);

    std::vector<double> errs;
    for (double h : {0.2, 0.1}) {
        GridSpec grid(2, 4.0, h);
        auto cc = condition_coefficients(s, 0.0, Vec::Zero(1), grid);
        auto op = assemble_deterministic_operator(cc, grid);
        Vec u(grid.size());
        for (std::int64_t f = 0; f < grid.size(); ++f)
            u[f] = std::exp(-0.5 * grid.node_coords(f).squaredNorm());
        const Vec Lu = op * u;
        double err = 0.0;
        for (std::int64_t f = 0; f < grid.size(); ++f) {
            const Vec x = grid.node_coords(f);
            if (x.lpNorm<Eigen::Infinity>() > 2.0) continue;
            double ex = 0.0;
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    ex += a(i, j) * (x[i] * x[j] - (i == j ? 1.0 : 0.0));
            ex *= u[f];
            err = std::max(err, std::abs(Lu[f] - ex));
        }
        errs.push_back(err);
    }
    INFO("errors " << errs[0] << " " << errs[1]);
    CHECK(std::log2(errs[0] / errs[1]) > 1.7);
}
