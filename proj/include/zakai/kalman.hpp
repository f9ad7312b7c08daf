#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "zakai/errors.hpp"
#include "zakai/families.hpp"
#include "zakai/sde.hpp"
#include "zakai/system.hpp"

namespace zakai {

/// Exactly linear-Gaussian scenario with independent signal/observation
/// noise blocks: b = A x + a0, B = H x, constant diffusions on disjoint
/// Wiener coordinates.
struct LinearGaussianSpec {
    Mat A;           // d x d
    Vec a0;          // d
    Mat H;           // m x d
    Mat theta_const; // d x d, acts on Wiener coords [0, d)
    Mat Theta_const; // m x m, acts on Wiener coords [d, d + m)
    Vec m0;          // Gaussian initial mean
    Mat P0;          // Gaussian initial covariance

    int d() const { return static_cast<int>(A.rows()); }
    int m() const { return static_cast<int>(H.rows()); }

    /// Equivalent SystemSpec (d2 = d + m, disjoint noise blocks).
    SystemSpec to_system(const InitialDensity& pi0, const Vec& y0, double K,
                         double delta, double T) const {
        const int dd = d(), mm = m();
        SystemSpec s;
        s.d = dd;
        s.d1 = dd + mm;
        s.d2 = dd + mm;
        s.K = K;
        s.delta = delta;
        s.T = T;
        s.pi0 = pi0;
        s.y0 = y0;
        const Mat A_ = A, H_ = H, th = theta_const, Th = Theta_const;
        const Vec a0_ = a0;
        s.b = [=](double, const Vec& z) -> Vec { return A_ * z.head(dd) + a0_; };
        s.theta = [=](double, const Vec&) -> Mat {
            Mat out = Mat::Zero(dd, dd + mm);
            out.leftCols(dd) = th;
            return out;
        };
        s.B = [=](double, const Vec& z) -> Vec { return H_ * z.head(dd); };
        s.Theta = [=](double, const Vec&) -> Mat {
            Mat out = Mat::Zero(mm, dd + mm);
            out.rightCols(mm) = Th;
            return out;
        };
        return s;
    }
};

struct KalmanTrajectory {
    std::vector<Vec> means;
    std::vector<Mat> covariances;
};

/// Euler discretization of the Kalman-Bucy mean SDE and Riccati ODE driven
/// by the path's observation increments. Covariance is re-symmetrized each
/// step.
inline KalmanTrajectory kalman_bucy(const LinearGaussianSpec& lin,
                                    const PathSample& path, double dt) {
    const int d = lin.d();
    const Mat R = lin.Theta_const * lin.Theta_const.transpose();
    const Mat Rinv = R.inverse();
    const Mat Q = lin.theta_const * lin.theta_const.transpose();

    KalmanTrajectory out;
    Vec mean = lin.m0;
    Mat P = lin.P0;
    out.means.push_back(mean);
    out.covariances.push_back(P);
    for (int k = 0; k < path.steps(); ++k) {
        const Mat G = P * lin.H.transpose() * Rinv; // gain
        const Vec dy = path.dy(k, d);
        mean += (lin.A * mean + lin.a0) * dt + G * (dy - lin.H * mean * dt);
        P += (lin.A * P + P * lin.A.transpose() + Q -
              P * lin.H.transpose() * Rinv * lin.H * P) *
             dt;
        P = 0.5 * (P + P.transpose());
        Eigen::SelfAdjointEigenSolver<Mat> es(P);
        if (es.eigenvalues().minCoeff() <= 0.0)
            throw RiccatiBlowup("kalman_bucy: covariance lost positive definiteness");
        out.means.push_back(mean);
        out.covariances.push_back(P);
    }
    return out;
}

} // namespace zakai
