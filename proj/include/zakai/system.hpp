#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <string>

#include "zakai/errors.hpp"

namespace zakai {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Nonrandom initial density on R^d, product of identical 1-d profiles.
struct InitialDensity {
    enum class Kind { Gaussian, Tent };
    Kind kind = Kind::Gaussian;
    Vec center;   // size d
    double width = 1.0; // stddev (gaussian) or half-width (tent)

    static InitialDensity gaussian(Vec c, double stddev) {
        InitialDensity p;
        p.kind = Kind::Gaussian;
        p.center = std::move(c);
        p.width = stddev;
        return p;
    }

    /// Compactly supported Lipschitz tent of unit mass per axis.
    static InitialDensity tent(Vec c, double halfwidth) {
        InitialDensity p;
        p.kind = Kind::Tent;
        p.center = std::move(c);
        p.width = halfwidth;
        return p;
    }

    double pdf(const Vec& x) const {
        double v = 1.0;
        for (int a = 0; a < center.size(); ++a) {
            const double u = x[a] - center[a];
            if (kind == Kind::Gaussian) {
                v *= std::exp(-0.5 * u * u / (width * width)) /
                     (width * std::sqrt(2.0 * M_PI));
            } else {
                const double t = 1.0 - std::abs(u) / width;
                v *= (t > 0.0 ? t / width : 0.0);
            }
        }
        return v;
    }

    /// Per-axis inverse CDF at quantile q in (0,1).
    double inverse_cdf_axis(int axis, double q) const {
        if (kind == Kind::Gaussian) {
            // Acklam-style rational approximation refined by one Newton step.
            return center[axis] + width * normal_quantile(q);
        }
        // symmetric triangular on [c-w, c+w]
        if (q < 0.5)
            return center[axis] - width * (1.0 - std::sqrt(2.0 * q));
        return center[axis] + width * (1.0 - std::sqrt(2.0 * (1.0 - q)));
    }

    static double normal_quantile(double q) {
        // Beasley-Springer-Moro
        static const double a[4] = {2.50662823884, -18.61500062529,
                                    41.39119773534, -25.44106049637};
        static const double b[4] = {-8.47351093090, 23.08336743743,
                                    -21.06224101826, 3.13082909833};
        static const double c[9] = {
            0.3374754822726147, 0.9761690190917186, 0.1607979714918209,
            0.0276438810333863, 0.0038405729373609, 0.0003951896511919,
            0.0000321767881768, 0.0000002888167364, 0.0000003960315187};
        const double u = q - 0.5;
        if (std::abs(u) < 0.42) {
            const double r = u * u;
            return u * (((a[3] * r + a[2]) * r + a[1]) * r + a[0]) /
                   ((((b[3] * r + b[2]) * r + b[1]) * r + b[0]) * r + 1.0);
        }
        double r = (u > 0.0) ? 1.0 - q : q;
        r = std::log(-std::log(r));
        double x = c[0];
        double rp = 1.0;
        for (int i = 1; i < 9; ++i) {
            rp *= r;
            x += c[i] * rp;
        }
        return (u > 0.0) ? x : -x;
    }
};

using SignalDriftFn = std::function<Vec(double t, const Vec& z)>;   // -> d
using SignalDiffFn = std::function<Mat(double t, const Vec& z)>;    // -> d x d2
using ObsDriftFn = std::function<Vec(double t, const Vec& z)>;      // -> d1-d
using ObsDiffFn = std::function<Mat(double t, const Vec& y)>;       // -> (d1-d) x d2

/// The partially observable system dz = b~ dt + theta~ dw with z = (x, y).
struct SystemSpec {
    int d = 1;   // signal dimension
    int d1 = 2;  // full state dimension
    int d2 = 2;  // Wiener dimension

    SignalDriftFn b;
    SignalDiffFn theta;
    ObsDriftFn B;
    ObsDiffFn Theta; // must ignore the x-part of z

    double K = 1.0;      // Lipschitz constant
    double delta = 0.1;  // nondegeneracy constant
    double T = 1.0;      // horizon

    InitialDensity pi0;
    Vec y0; // fixed initial observation, size d1-d

    double coeff_bound = 1e6;    // declared bound on coefficient values
    double guard_radius = 1e4;   // state blowup guard for the simulator

    int obs_dim() const { return d1 - d; }

    void validate() const {
        if (d < 1) throw ConfigError("SystemSpec: d must be positive");
        if (d1 <= d) throw ConfigError("SystemSpec: d1 must exceed d");
        if (d2 < d1) throw ConfigError("SystemSpec: d2 must be at least d1");
        if (delta <= 0.0) throw ConfigError("SystemSpec: delta must be positive");
        if (T <= 0.0) throw ConfigError("SystemSpec: T must be positive");
        if (y0.size() != d1 - d) throw ConfigError("SystemSpec: y0 has wrong size");
        if (pi0.center.size() != d) throw ConfigError("SystemSpec: pi0 center has wrong size");
    }

    /// Full-state drift b~ = (b, B).
    Vec drift_full(double t, const Vec& z) const {
        Vec out(d1);
        out.head(d) = b(t, z);
        out.tail(d1 - d) = B(t, z);
        return out;
    }

    /// Full-state diffusion theta~ = (theta; Theta), d1 x d2.
    Mat diffusion_full(double t, const Vec& z) const {
        Mat out(d1, d2);
        out.topRows(d) = theta(t, z);
        out.bottomRows(d1 - d) = Theta(t, z.tail(d1 - d));
        return out;
    }
};

} // namespace zakai
