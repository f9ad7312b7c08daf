#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <random>

#include "zakai/families.hpp"
#include "zakai/sde.hpp"

using namespace zakai;

namespace {

FamilyParams base_params() {
    FamilyParams p;
    p.d = 1;
    p.d1 = 2;
    p.d2 = 2;
    p.pi0 = InitialDensity::gaussian(Vec::Constant(1, 0.0), 1.0);
    p.y0 = Vec::Zero(1);
    return p;
}

} // namespace

TEST_CASE("mesh_steps accepts integral ratios only") {
    CHECK(mesh_steps(1.0, 0.001) == 1000);
    CHECK(mesh_steps(2.0, 0.5) == 4);
    CHECK_THROWS_AS(mesh_steps(1.0, 0.0003), ConfigError);
    CHECK_THROWS_AS(mesh_steps(-1.0, 0.1), ConfigError);
}

TEST_CASE("frozen dynamics keep the state constant") {
    auto p = base_params();
    p.theta0 = 0.0;
    p.Theta0 = 0.0;
    auto spec = build_system(p);
    const auto path = simulate_system(spec, 0.01, 7u);
    REQUIRE(path.steps() == 100);
    for (int k = 1; k <= path.steps(); ++k)
        CHECK((path.z.row(k) - path.z.row(0)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("pure drift integrates exactly on the mesh") {
    auto p = base_params();
    p.bc = 1.0;
    p.Hc = 2.0;
    p.theta0 = 0.0;
    p.Theta0 = 0.0;
    p.pi0 = InitialDensity::gaussian(Vec::Constant(1, 0.5), 1e-12);
    auto spec = build_system(p);
    const auto path = simulate_system(spec, 0.01, 3u);
    for (int k = 0; k <= path.steps(); ++k) {
        const double t = path.times[k];
        CHECK(path.z(k, 0) == Catch::Approx(0.5 + t).margin(1e-9));
        CHECK(path.z(k, 1) == Catch::Approx(2.0 * t).margin(1e-9));
    }
}

TEST_CASE("Ornstein-Uhlenbeck terminal moments match the closed form") {
    auto p = base_params();
    p.ba = -1.0;
    p.theta0 = 1.0;
    p.Theta0 = 1.0;
    p.pi0 = InitialDensity::gaussian(Vec::Constant(1, 1.0), 1e-10);
    auto spec = build_system(p);

    const int n_paths = 10000;
    const double dt = 0.01;
    double s1 = 0.0, s2 = 0.0;
    for (int s = 0; s < n_paths; ++s) {
        const auto path = simulate_system(spec, dt, 100u + s);
        const double xT = path.z(path.steps(), 0);
        s1 += xT;
        s2 += xT * xT;
    }
    const double mean = s1 / n_paths;
    const double var = s2 / n_paths - mean * mean;
    // x_T ~ N(e^{-T} x0, (1 - e^{-2T}) / 2) for dx = -x dt + dw
    CHECK(mean == Catch::Approx(std::exp(-1.0)).margin(0.02));
    CHECK(var == Catch::Approx(0.5 * (1.0 - std::exp(-2.0))).margin(0.02));
}

TEST_CASE("simulation is deterministic per seed") {
    auto p = base_params();
    p.family = "sinusoid";
    p.ba = -0.5;
    p.bs = 0.3;
    p.Ha = 1.0;
    p.theta1 = 0.2;
    auto spec = build_system(p);
    const auto a = simulate_system(spec, 0.005, 42u);
    const auto b = simulate_system(spec, 0.005, 42u);
    CHECK(a.z == b.z);
    CHECK(a.w == b.w);
    const auto c = simulate_system(spec, 0.005, 43u);
    CHECK(a.z != c.z);
}

TEST_CASE("state blowup trips the guard") {
    auto p = base_params();
    p.ba = 40.0; // strongly repelling drift
    p.pi0 = InitialDensity::gaussian(Vec::Constant(1, 2.0), 1e-10);
    auto spec = build_system(p);
    spec.guard_radius = 50.0;
    CHECK_THROWS_AS(simulate_system(spec, 0.05, 1u), BlowupError);
}

TEST_CASE("derived increments satisfy d(w_hat) = beta dt + d(w_tilde)") {
    auto p = base_params();
    p.family = "sinusoid";
    p.ba = -1.0;
    p.Ha = 0.5;
    p.Hs = 0.2;
    p.theta1 = 0.3;
    p.theta_cross = 0.4;
    p.Theta0 = 2.0;
    auto spec = build_system(p);
    const auto path = simulate_system(spec, 0.01, 11u);
    const auto [w_hat, w_tilde] = derived_wieners(path, spec);
    REQUIRE(w_hat.rows() == path.steps());

    for (int k = 0; k < path.steps(); ++k) {
        const Vec y = path.y_at(k, spec.d);
        const Mat Psi = compute_psi(spec, path.times[k], y);
        const Vec beta = Psi * spec.B(path.times[k], path.z.row(k).transpose());
        const Vec lhs = w_hat.row(k).transpose();
        const Vec rhs = beta * path.dt + w_tilde.row(k).transpose();
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-13);
    }
}

TEST_CASE("with unit observation noise w_hat recovers the raw increments") {
    auto p = base_params();
    p.Hc = 0.0;
    p.Theta0 = 2.0;
    auto spec = build_system(p);
    const auto path = simulate_system(spec, 0.01, 5u);
    const auto [w_hat, w_tilde] = derived_wieners(path, spec);
    // B = 0 and Theta = 2 [0 | 1]: Psi = 1/2, so both equal the obs column of w
    for (int k = 0; k < path.steps(); ++k) {
        CHECK(w_hat(k, 0) == Catch::Approx(path.w(k, 1)).margin(1e-13));
        CHECK(w_tilde(k, 0) == Catch::Approx(path.w(k, 1)).margin(1e-13));
    }
}

TEST_CASE("likelihood is identically one when B vanishes") {
    auto p = base_params();
    auto spec = build_system(p);
    const auto path = simulate_system(spec, 0.01, 9u);
    const Vec rho = likelihood_rho(path, spec);
    for (int k = 0; k <= path.steps(); ++k)
        CHECK(rho[k] == Catch::Approx(1.0).margin(1e-14));
}

TEST_CASE("likelihood matches the closed form for constant beta") {
    auto p = base_params();
    p.Hc = 0.7;
    auto spec = build_system(p);
    const auto path = simulate_system(spec, 0.01, 17u);
    const auto [w_hat, w_tilde] = derived_wieners(path, spec);
    const double c = 0.7;
    double wt = 0.0;
    for (int k = 0; k < path.steps(); ++k) wt += w_tilde(k, 0);
    const Vec rho = likelihood_rho(path, spec);
    const double expect = std::exp(-c * wt - 0.5 * c * c * spec.T);
    CHECK(rho[path.steps()] == Catch::Approx(expect).epsilon(1e-12));
}

TEST_CASE("likelihood has unit mean across paths") {
    auto p = base_params();
    p.Hc = 0.8;
    auto spec = build_system(p);
    const int n_paths = 20000;
    double acc = 0.0;
    for (int s = 0; s < n_paths; ++s) {
        const auto path = simulate_system(spec, 0.02, 1000u + s);
        acc += likelihood_rho(path, spec)[path.steps()];
    }
    // rho_T is lognormal with variance e^{c^2 T} - 1 ~ 0.9, so the Monte
    // Carlo error of the mean at 2e4 paths is about 0.007
    CHECK(acc / n_paths == Catch::Approx(1.0).margin(0.03));
}

namespace {

// Re-run the scheme from recorded increments; must reproduce z exactly.
Eigen::MatrixXd replay(const SystemSpec& spec, const PathSample& path,
                       const Eigen::MatrixXd& w) {
    const int n = static_cast<int>(w.rows());
    Eigen::MatrixXd z(n + 1, spec.d1);
    z.row(0) = path.z.row(0);
    Vec cur = z.row(0).transpose();
    const double dt = spec.T / n;
    for (int k = 0; k < n; ++k) {
        const double t = k * dt;
        cur += spec.drift_full(t, cur) * dt +
               spec.diffusion_full(t, cur) * w.row(k).transpose();
        z.row(k + 1) = cur.transpose();
    }
    return z;
}

} // namespace

TEST_CASE("replaying recorded increments reproduces the path bit for bit") {
    auto p = base_params();
    p.family = "sinusoid";
    p.ba = -1.0;
    p.bs = 0.4;
    p.theta1 = 0.5;
    p.Ha = 1.0;
    auto spec = build_system(p);
    const auto path = simulate_system(spec, 0.01, 23u);
    const auto z = replay(spec, path, path.w);
    CHECK((z - path.z).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("coupled refinement converges at strong order about one half") {
    auto p = base_params();
    p.family = "sinusoid";
    p.ba = -1.0;
    p.theta1 = 0.5;
    p.Ha = 1.0;
    auto spec = build_system(p);

    const int levels = 4;          // dt = T / 2^{l+4}
    const int n_fine = 1 << (4 + levels);
    const int n_paths = 400;
    std::vector<double> rms(levels - 1, 0.0);

    std::mt19937_64 rng(2024);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int s = 0; s < n_paths; ++s) {
        Eigen::MatrixXd w_fine(n_fine, spec.d2);
        const double sdt = std::sqrt(spec.T / n_fine);
        for (int k = 0; k < n_fine; ++k)
            for (int j = 0; j < spec.d2; ++j) w_fine(k, j) = sdt * gauss(rng);

        PathSample dummy;
        dummy.dt = spec.T / n_fine;
        dummy.z = Eigen::MatrixXd::Zero(1, spec.d1);
        dummy.z(0, 0) = 1.0;
        dummy.w = w_fine;

        std::vector<double> xT(levels);
        Eigen::MatrixXd w = w_fine;
        for (int l = levels - 1; l >= 0; --l) {
            const auto z = replay(spec, dummy, w);
            xT[l] = z(z.rows() - 1, 0);
            if (l > 0) { // aggregate pairs of increments for the coarser mesh
                Eigen::MatrixXd wc(w.rows() / 2, w.cols());
                for (int k = 0; k < wc.rows(); ++k)
                    wc.row(k) = w.row(2 * k) + w.row(2 * k + 1);
                w = wc;
            }
        }
        for (int l = 0; l + 1 < levels; ++l) {
            const double e = xT[l] - xT[l + 1];
            rms[l] += e * e;
        }
    }
    for (auto& r : rms) r = std::sqrt(r / n_paths);

    // least-squares slope of log(rms) against log(dt)
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int l = 0; l + 1 < levels; ++l) {
        const double x = std::log(spec.T / (1 << (4 + l)));
        const double y = std::log(rms[l]);
        sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    const int m = levels - 1;
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    INFO("rms = " << rms[0] << ", " << rms[1] << ", " << rms[2]
                  << " slope = " << slope);
    CHECK(slope > 0.3);
    CHECK(slope < 1.2);
    CHECK(rms[0] > rms[1]);
    CHECK(rms[1] > rms[2]);
}

TEST_CASE("wiener increments have the advertised variance") {
    auto p = base_params();
    auto spec = build_system(p);
    spec.T = 10.0;
    const auto path = simulate_system(spec, 0.001, 77u);
    for (int j = 0; j < spec.d2; ++j) {
        const double var = path.w.col(j).squaredNorm() / path.steps();
        CHECK(var == Catch::Approx(0.001).epsilon(0.05));
    }
}

TEST_CASE("coarsening aggregates increments and subsamples states") {
    auto p = base_params();
    p.family = "linear";
    p.ba = -0.5;
    p.Ha = 1.0;
    auto spec = build_system(p);
    const auto path = simulate_system(spec, 0.001, 44u);
    const auto c = coarsen(path, 10);
    CHECK(c.steps() == path.steps() / 10);
    CHECK(c.dt == Catch::Approx(0.01));
    CHECK(c.z.row(3) == path.z.row(30));
    CHECK(c.times[7] == path.times[70]);
    Vec acc = Vec::Zero(2);
    for (int s = 0; s < 10; ++s) acc += path.w.row(20 + s).transpose();
    CHECK((c.w.row(2).transpose() - acc).cwiseAbs().maxCoeff() < 1e-15);
    // observation increments aggregate consistently too
    CHECK((c.dy(2, 1) - (path.z.row(30) - path.z.row(20)).tail(1).transpose())
              .cwiseAbs()
              .maxCoeff() == 0.0);

    const auto same = coarsen(path, 1);
    CHECK(same.w == path.w);
    CHECK(same.z == path.z);
    CHECK_THROWS_AS(coarsen(path, 7), ConfigError);
}

TEST_CASE("path replay files round-trip") {
    auto p = base_params();
    p.family = "linear";
    p.ba = -0.3;
    p.Ha = 1.0;
    auto spec = build_system(p);
    const auto path = simulate_system(spec, 0.01, 99u);

    const std::string file = "roundtrip_path.bin";
    pathio::write_binary(path, file);
    const auto back = pathio::read_binary(file);
    CHECK(back.dt == path.dt);
    CHECK(back.seed == path.seed);
    CHECK(back.times == path.times);
    CHECK(back.w == path.w);
    CHECK(back.z == path.z);
    std::remove(file.c_str());

    CHECK_THROWS_AS(pathio::read_binary("does_not_exist.bin"), ConfigError);
}
