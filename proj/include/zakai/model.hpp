#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <utility>
#include <vector>

#include "zakai/errors.hpp"
#include "zakai/grid.hpp"
#include "zakai/system.hpp"

namespace zakai {

/// Inverse symmetric square root of Theta Theta* at (t, y).
///
/// Kept symmetric through the eigendecomposition so that
/// Psi * (Theta Theta*) * Psi = I holds to round-off.
inline Mat compute_psi(const SystemSpec& spec, double t, const Vec& y) {
    const Mat Th = spec.Theta(t, y);
    if (!Th.allFinite())
        throw EvaluationError("compute_psi: Theta evaluated non-finite");
    const Mat G = Th * Th.transpose();
    Eigen::SelfAdjointEigenSolver<Mat> es(G);
    if (es.info() != Eigen::Success)
        throw EvaluationError("compute_psi: eigendecomposition failed");
    if (es.eigenvalues().minCoeff() < 1e-12)
        throw SingularObservationNoise(
            "compute_psi: Theta Theta* has eigenvalue below 1e-12");
    const Vec inv_sqrt = es.eigenvalues().array().rsqrt();
    return es.eigenvectors() * inv_sqrt.asDiagonal() *
           es.eigenvectors().transpose();
}

/// Grid samples of the observation-conditioned coefficient fields at a
/// fixed (t, y_t), plus their weak divergence fields.
///
/// Component layout: a(n, i*d+j) = a^{ij} at node n, sigma(n, i*m+k) = sigma^{ik},
/// div_a(n, j) = D_i a^{ij}, div_sigma(n, k) = D_i sigma^{ik}.
struct ConditionedCoefficients {
    double t = 0.0;
    Vec y;
    GridSpec grid;
    Mat psi; // m x m, m = d1 - d

    Eigen::MatrixXd a;         // N x d*d
    Eigen::MatrixXd b_vec;     // N x d
    Eigen::MatrixXd sigma;     // N x d*m
    Eigen::MatrixXd beta;      // N x m
    Eigen::MatrixXd div_a;     // N x d
    Eigen::MatrixXd div_sigma; // N x m

    int d() const { return static_cast<int>(b_vec.cols()); }
    int m() const { return static_cast<int>(beta.cols()); }
};

namespace detail {

/// Central differences along each axis of a multi-component grid field,
/// one-sided at box edges. Input/output: N x ncomp.
inline Eigen::MatrixXd axis_derivative(const GridSpec& grid,
                                       const Eigen::MatrixXd& field,
                                       int axis) {
    const std::int64_t N = grid.size();
    const std::int64_t s = grid.stride(axis);
    const int n = grid.nodes[axis];
    Eigen::MatrixXd out(N, field.cols());
    for (std::int64_t f = 0; f < N; ++f) {
        const int ia = static_cast<int>((f / s) % n);
        if (ia == 0)
            out.row(f) = (field.row(f + s) - field.row(f)) / grid.h;
        else if (ia == n - 1)
            out.row(f) = (field.row(f) - field.row(f - s)) / grid.h;
        else
            out.row(f) = (field.row(f + s) - field.row(f - s)) / (2.0 * grid.h);
    }
    return out;
}

} // namespace detail

/// Samples a, b, sigma, beta over the grid at (t, y) and differentiates the
/// sampled a and sigma fields.
inline ConditionedCoefficients condition_coefficients(const SystemSpec& spec,
                                                      double t, const Vec& y,
                                                      const GridSpec& grid) {
    const int d = spec.d;
    const int m = spec.obs_dim();
    const std::int64_t N = grid.size();

    ConditionedCoefficients cc;
    cc.t = t;
    cc.y = y;
    cc.grid = grid;
    cc.psi = compute_psi(spec, t, y);
    const Mat Th = spec.Theta(t, y);
    const Mat ThPsi = Th.transpose() * cc.psi; // d2 x m

    cc.a.resize(N, d * d);
    cc.b_vec.resize(N, d);
    cc.sigma.resize(N, d * m);
    cc.beta.resize(N, m);

    Vec z(spec.d1);
    z.tail(m) = y;
    for (std::int64_t f = 0; f < N; ++f) {
        z.head(d) = grid.node_coords(f);
        const Mat th = spec.theta(t, z);
        const Vec bv = spec.b(t, z);
        const Vec Bv = spec.B(t, z);
        if (!th.allFinite() || !bv.allFinite() || !Bv.allFinite())
            throw EvaluationError("condition_coefficients: non-finite coefficient");
        const Mat av = 0.5 * th * th.transpose();
        const Mat sv = th * ThPsi;
        const Vec bev = cc.psi * Bv;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) cc.a(f, i * d + j) = av(i, j);
        cc.b_vec.row(f) = bv.transpose();
        for (int i = 0; i < d; ++i)
            for (int k = 0; k < m; ++k) cc.sigma(f, i * m + k) = sv(i, k);
        cc.beta.row(f) = bev.transpose();
    }

    // div_a^j = D_i a^{ij}, div_sigma^k = D_i sigma^{ik}
    cc.div_a = Eigen::MatrixXd::Zero(N, d);
    cc.div_sigma = Eigen::MatrixXd::Zero(N, m);
    for (int i = 0; i < d; ++i) {
        const Eigen::MatrixXd da = detail::axis_derivative(grid, cc.a, i);
        const Eigen::MatrixXd ds = detail::axis_derivative(grid, cc.sigma, i);
        for (int j = 0; j < d; ++j) cc.div_a.col(j) += da.col(i * d + j);
        for (int k = 0; k < m; ++k) cc.div_sigma.col(k) += ds.col(i * m + k);
    }
    return cc;
}

/// Axis-aligned box in z-space.
struct Box {
    Vec lo, hi;
};

struct AssumptionReport {
    double lipschitz_b = 0.0;
    double lipschitz_theta = 0.0;
    double lipschitz_B = 0.0;
    double lipschitz_Theta = 0.0;
    double min_eigen_atilde = 0.0;
    double psi_norm_bound = 0.0;  // max eigenvalue of Psi over samples
    double projector_bound = 0.0; // min of the theta(I - Theta* Psi^2 Theta)theta* form
    bool pass_lipschitz = false;
    bool pass_nondegenerate = false;
    bool pass_projector = false;

    bool pass() const {
        return pass_lipschitz && pass_nondegenerate && pass_projector;
    }
};

/// Randomized check of the Lipschitz and nondegeneracy assumptions over a
/// scenario box. Coefficients are black boxes, so this samples; it proves
/// nothing, it screens.
inline AssumptionReport verify_assumptions(const SystemSpec& spec,
                                           const Box& box, int n_samples,
                                           unsigned seed,
                                           double tolerance = 1e-9) {
    if (n_samples < 2)
        throw ConfigError("verify_assumptions: n_samples must be >= 2");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    const int d1 = spec.d1;
    auto sample_z = [&] {
        Vec z(d1);
        for (int i = 0; i < d1; ++i)
            z[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * unif(rng);
        return z;
    };

    AssumptionReport rep;
    rep.min_eigen_atilde = std::numeric_limits<double>::infinity();
    rep.projector_bound = std::numeric_limits<double>::infinity();

    Vec z_prev = sample_z();
    double t_prev = spec.T * unif(rng);
    for (int s = 0; s < n_samples; ++s) {
        const Vec z = sample_z();
        const double t = spec.T * unif(rng);

        const Mat thf = spec.diffusion_full(t, z);
        const Mat atilde = 0.5 * thf * thf.transpose();
        Eigen::SelfAdjointEigenSolver<Mat> es(atilde);
        rep.min_eigen_atilde =
            std::min(rep.min_eigen_atilde, es.eigenvalues().minCoeff());

        const Mat Th = spec.Theta(t, z.tail(spec.obs_dim()));
        const Mat G = Th * Th.transpose();
        Eigen::SelfAdjointEigenSolver<Mat> esg(G);
        if (esg.eigenvalues().minCoeff() >= 1e-12) {
            const Mat Psi = compute_psi(spec, t, z.tail(spec.obs_dim()));
            rep.psi_norm_bound = std::max(
                rep.psi_norm_bound,
                Eigen::SelfAdjointEigenSolver<Mat>(Psi).eigenvalues().maxCoeff());
            const Mat th = spec.theta(t, z);
            const Mat proj =
                th *
                (Mat::Identity(spec.d2, spec.d2) - Th.transpose() * Psi * Psi * Th) *
                th.transpose();
            rep.projector_bound = std::min(
                rep.projector_bound,
                Eigen::SelfAdjointEigenSolver<Mat>(proj).eigenvalues().minCoeff());
        } else {
            rep.psi_norm_bound = std::numeric_limits<double>::infinity();
            rep.projector_bound = 0.0;
        }

        // Lipschitz quotients in z at matching times.
        const double dz = (z - z_prev).norm();
        if (dz > 1e-12) {
            auto quot = [&](const Mat& f1, const Mat& f2) {
                return (f1 - f2).norm() / dz;
            };
            rep.lipschitz_b = std::max(
                rep.lipschitz_b, quot(spec.b(t_prev, z), spec.b(t_prev, z_prev)));
            rep.lipschitz_theta =
                std::max(rep.lipschitz_theta,
                         quot(spec.theta(t_prev, z), spec.theta(t_prev, z_prev)));
            rep.lipschitz_B = std::max(
                rep.lipschitz_B, quot(spec.B(t_prev, z), spec.B(t_prev, z_prev)));
            rep.lipschitz_Theta =
                std::max(rep.lipschitz_Theta,
                         quot(spec.Theta(t_prev, z.tail(spec.obs_dim())),
                              spec.Theta(t_prev, z_prev.tail(spec.obs_dim()))));
        }
        z_prev = z;
        t_prev = t;
    }

    const double lip = std::max({rep.lipschitz_b, rep.lipschitz_theta,
                                 rep.lipschitz_B, rep.lipschitz_Theta});
    rep.pass_lipschitz = lip <= spec.K + tolerance;
    rep.pass_nondegenerate = rep.min_eigen_atilde >= spec.delta - tolerance;
    rep.pass_projector = rep.projector_bound >= spec.delta - tolerance;
    return rep;
}

namespace detail {

/// The engine's fixed 1-d smooth bump, supported on (-1, 1), unnormalized.
inline double bump(double u) {
    const double s = 1.0 - u * u;
    return s > 0.0 ? std::exp(-1.0 / s) : 0.0;
}

/// Per-axis Gauss-Legendre rule for the bump: nodes on [-1,1] and weights
/// that sum to exactly one against the bump.
struct BumpRule {
    std::vector<double> nodes;
    std::vector<double> weights; // already multiplied by bump values

    explicit BumpRule(int n_nodes = 40) {
        nodes.resize(n_nodes);
        weights.resize(n_nodes);
        double raw = 0.0;
        for (int i = 0; i < n_nodes; ++i) {
            // Newton iteration on P_n from the Chebyshev initial guess
            double x = std::cos(M_PI * (i + 0.75) / (n_nodes + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = x;
                for (int k = 2; k <= n_nodes; ++k) {
                    const double p2 =
                        ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n_nodes * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-15) break;
            }
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp) * bump(x);
            raw += weights[i];
        }
        // reference value from a high-resolution trapezoid sum
        double ref = 0.0;
        const int nref = 4001;
        const double hr = 2.0 / (nref - 1);
        for (int i = 0; i < nref; ++i) {
            const double w = (i == 0 || i == nref - 1) ? 0.5 * hr : hr;
            ref += w * bump(-1.0 + i * hr);
        }
        if (std::abs(raw / ref - 1.0) > 1e-8)
            throw QuadratureError("mollifier quadrature failed to normalize");
        for (double& w : weights) w /= raw;
    }
};

} // namespace detail

/// Replaces theta by its mollification zeta_n * theta, convolving in the full
/// state z with the scaled product bump. All other coefficients unchanged.
inline SystemSpec mollify_theta(const SystemSpec& spec, int n,
                                int quad_nodes = 40) {
    if (n < 1) throw ConfigError("mollify_theta: n must be >= 1");
    auto rule = std::make_shared<detail::BumpRule>(quad_nodes);
    const SignalDiffFn base = spec.theta;
    const int d1 = spec.d1;
    const double scale = 1.0 / n;

    SystemSpec out = spec;
    out.theta = [base, rule, d1, scale](double t, const Vec& z) -> Mat {
        const int M = static_cast<int>(rule->nodes.size());
        Mat acc;
        std::vector<int> idx(d1, 0);
        Vec zp(d1);
        bool first = true;
        // tensor-product quadrature over the mollifier support
        while (true) {
            double w = 1.0;
            for (int a = 0; a < d1; ++a) {
                w *= rule->weights[idx[a]];
                zp[a] = z[a] - scale * rule->nodes[idx[a]];
            }
            const Mat v = base(t, zp);
            if (first) {
                acc = w * v;
                first = false;
            } else {
                acc += w * v;
            }
            int a = d1 - 1;
            while (a >= 0 && ++idx[a] == M) idx[a--] = 0;
            if (a < 0) break;
        }
        return acc;
    };
    return out;
}

} // namespace zakai
