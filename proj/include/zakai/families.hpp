#pragma once

#include <cmath>
#include <string>

#include "zakai/errors.hpp"
#include "zakai/system.hpp"

namespace zakai {

/// Parameters of the built-in coefficient families.
///
/// Signal drift     b_i(x)   = ba*x_i + bc + bs*sin(x_i)      (bs only for sinusoid)
/// Signal diffusion theta_ii = theta0 + theta1*g(x_i) in the signal-noise
///                  columns, plus a constant cross column theta_cross into the
///                  observation-noise block; g = sin for sinusoid, |.| for kink.
/// Obs drift        B_k(x)   = Ha*x_{min(k,d-1)} + Hc + Hs*sin(x_{min(k,d-1)})
/// Obs diffusion    Theta    = Theta0 * [0 | I_m] (constant, independent of x)
struct FamilyParams {
    std::string family = "constant"; // constant | linear | sinusoid | kink
    int d = 1;
    int d1 = 2;
    int d2 = 2;

    double ba = 0.0, bc = 0.0, bs = 0.0;
    double Ha = 0.0, Hc = 0.0, Hs = 0.0;
    double theta0 = 1.0, theta1 = 0.0, theta_cross = 0.0;
    double Theta0 = 1.0;

    double K = 2.0;
    double delta = 0.1;
    double T = 1.0;

    InitialDensity pi0;
    Vec y0;
};

inline bool known_family(const std::string& f) {
    return f == "constant" || f == "linear" || f == "sinusoid" || f == "kink";
}

inline SystemSpec build_system(const FamilyParams& p) {
    if (!known_family(p.family))
        throw ConfigError("unknown model family '" + p.family +
                          "' (known: constant, linear, sinusoid, kink)");
    const int d = p.d, m = p.d1 - p.d, d2 = p.d2;
    const std::string fam = p.family;

    SystemSpec s;
    s.d = p.d;
    s.d1 = p.d1;
    s.d2 = p.d2;
    s.K = p.K;
    s.delta = p.delta;
    s.T = p.T;
    s.pi0 = p.pi0;
    s.y0 = p.y0;

    const double ba = p.ba, bc = p.bc, bs = p.bs;
    s.b = [=](double, const Vec& z) {
        Vec out(d);
        for (int i = 0; i < d; ++i) {
            out[i] = ba * z[i] + bc;
            if (fam == "sinusoid") out[i] += bs * std::sin(z[i]);
        }
        return out;
    };

    const double t0 = p.theta0, t1 = p.theta1, tc = p.theta_cross;
    s.theta = [=](double, const Vec& z) {
        Mat th = Mat::Zero(d, d2);
        for (int i = 0; i < d; ++i) {
            double g = 0.0;
            if (fam == "sinusoid") g = std::sin(z[i]);
            if (fam == "kink") g = std::abs(z[i]);
            th(i, i) = t0 + t1 * g;
            if (tc != 0.0) th(i, d2 - m + std::min(i, m - 1)) = tc;
        }
        return th;
    };

    const double Ha = p.Ha, Hc = p.Hc, Hs = p.Hs;
    s.B = [=](double, const Vec& z) {
        Vec out(m);
        for (int k = 0; k < m; ++k) {
            const double xk = z[std::min(k, d - 1)];
            out[k] = Ha * xk + Hc;
            if (fam == "sinusoid") out[k] += Hs * std::sin(xk);
        }
        return out;
    };

    const double Th0 = p.Theta0;
    s.Theta = [=](double, const Vec&) {
        Mat Th = Mat::Zero(m, d2);
        for (int k = 0; k < m; ++k) Th(k, d2 - m + k) = Th0;
        return Th;
    };

    s.validate();
    return s;
}

} // namespace zakai
