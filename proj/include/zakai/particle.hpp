#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "zakai/errors.hpp"
#include "zakai/model.hpp"
#include "zakai/sde.hpp"
#include "zakai/system.hpp"

namespace zakai {

struct ParticleEnsemble {
    Eigen::MatrixXd positions; // N x d
    Vec log_weights;           // N, normalized so weights sum to 1
    double ess = 0.0;
    double t = 0.0;
};

struct ParticleTrajectory {
    std::vector<ParticleEnsemble> snapshots;
    Eigen::MatrixXd means; // per coarse mesh point
    Vec ess_series;
    Vec times;
};

namespace detail {

/// Normalizes log weights in place; returns the effective sample size.
inline double normalize_log_weights(Vec& logw) {
    const double mx = logw.maxCoeff();
    Vec w = (logw.array() - mx).exp();
    const double s = w.sum();
    w /= s;
    logw = w.array().log();
    return 1.0 / w.squaredNorm();
}

inline void systematic_resample(Eigen::MatrixXd& pos, Vec& logw,
                                std::mt19937_64& rng) {
    const int N = static_cast<int>(pos.rows());
    Vec w = logw.array().exp();
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u0 = unif(rng) / N;
    Eigen::MatrixXd out(pos.rows(), pos.cols());
    double cum = w[0];
    int i = 0;
    for (int j = 0; j < N; ++j) {
        const double u = u0 + static_cast<double>(j) / N;
        while (cum < u && i < N - 1) cum += w[++i];
        out.row(j) = pos.row(i);
    }
    pos = std::move(out);
    logw.setConstant(-std::log(static_cast<double>(N)));
}

/// Square root of theta theta* - sigma sigma* (residual signal noise after
/// conditioning on the observation channel), clamped at zero.
inline Mat residual_noise_sqrt(const Mat& th, const Mat& sigma) {
    Mat C = th * th.transpose() - sigma * sigma.transpose();
    if (C.rows() == 1) {
        const double v = std::max(C(0, 0), 0.0);
        return Mat::Constant(1, 1, std::sqrt(v));
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(C);
    const Vec lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

} // namespace detail

/// Bootstrap filter matched to the correlated-noise system: the particle move
/// splits theta dw into the observed channel sigma dw_hat and an independent
/// residual, and the weight carries the discrete Girsanov factor
/// exp(beta . dw_hat - |beta|^2 dt / 2).
///
/// `stride` coarsens the particle mesh by aggregating observation increments.
inline ParticleTrajectory particle_filter(const SystemSpec& spec,
                                          const PathSample& path, int N,
                                          unsigned seed, int stride = 1,
                                          int snapshot_every = 0) {
    if (N < 100) throw ConfigError("particle_filter: N must be >= 100");
    if (stride < 1 || path.steps() % stride != 0)
        throw ConfigError("particle_filter: stride must divide the step count");
    const int d = spec.d;
    const int n_coarse = path.steps() / stride;
    const double dt = path.dt * stride;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    Eigen::MatrixXd pos(N, d);
    for (int i = 0; i < N; ++i)
        for (int a = 0; a < d; ++a) {
            double q = unif(rng);
            q = std::min(std::max(q, 1e-12), 1.0 - 1e-12);
            pos(i, a) = spec.pi0.inverse_cdf_axis(a, q);
        }
    Vec logw = Vec::Constant(N, -std::log(static_cast<double>(N)));

    ParticleTrajectory out;
    out.means.resize(n_coarse + 1, d);
    out.ess_series.resize(n_coarse + 1);
    out.times.resize(n_coarse + 1);

    auto record = [&](int k, double t, double ess) {
        out.times[k] = t;
        out.ess_series[k] = ess;
        const Vec w = logw.array().exp();
        out.means.row(k) = (w.transpose() * pos);
        if ((snapshot_every > 0 && k % snapshot_every == 0) || k == n_coarse) {
            ParticleEnsemble snap;
            snap.positions = pos;
            snap.log_weights = logw;
            snap.ess = ess;
            snap.t = t;
            out.snapshots.push_back(std::move(snap));
        }
    };
    record(0, 0.0, static_cast<double>(N));

    Vec z(spec.d1), xi(d);
    const double sdt = std::sqrt(dt);
    for (int k = 0; k < n_coarse; ++k) {
        const double t = path.times[k * stride];
        const Vec y = path.y_at(k * stride, d);
        const Mat Psi = compute_psi(spec, t, y);
        Vec dy = Vec::Zero(spec.obs_dim());
        for (int s = 0; s < stride; ++s) dy += path.dy(k * stride + s, d);
        const Vec dw_hat = Psi * dy;
        const Mat ThPsi = spec.Theta(t, y).transpose() * Psi;

        z.tail(spec.obs_dim()) = y;
        for (int i = 0; i < N; ++i) {
            z.head(d) = pos.row(i).transpose();
            const Mat th = spec.theta(t, z);
            const Mat sigma = th * ThPsi;
            const Vec beta = Psi * spec.B(t, z);
            const Mat rs = detail::residual_noise_sqrt(th, sigma);
            for (int a = 0; a < d; ++a) xi[a] = sdt * gauss(rng);
            pos.row(i) += ((spec.b(t, z) - sigma * beta) * dt + sigma * dw_hat +
                           rs * xi)
                              .transpose();
            logw[i] += beta.dot(dw_hat) - 0.5 * beta.squaredNorm() * dt;
        }

        double ess = detail::normalize_log_weights(logw);
        if (ess < 0.5 * N) {
            // below 10 effective particles the resampled cloud is just copies
            if (ess < 10.0)
                throw DegeneracyError("particle_filter: ensemble degenerate");
            detail::systematic_resample(pos, logw, rng);
            ess = static_cast<double>(N);
        }
        record(k + 1, path.times[(k + 1) * stride], ess);
    }
    return out;
}

} // namespace zakai
