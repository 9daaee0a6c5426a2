#pragma once

// Reference computations used by the tests. Nothing here calls into the
// library's integrator, root finder or series code.

#include <cmath>
#include <functional>
#include <numbers>

namespace oracle {

inline double arctan_ramp(double tau) { return 2.0 / std::numbers::pi * std::atan(tau); }
inline double arctan_ramp_deriv(double tau) { return 2.0 / std::numbers::pi / (1.0 + tau * tau); }

/// Right-hand side of the quadratic model -(x - Lambda(r t))^2 + zeta with the arctan ramp.
inline std::function<double(double, double)> quad_arctan_rhs(double zeta, double r) {
    return [zeta, r](double t, double x) {
        const double d = x - arctan_ramp(r * t);
        return -d * d + zeta;
    };
}

/// Classic fixed-step RK4 from (t0, x0) to t1. Returns NaN if |x| exceeds bound.
inline double rk4(const std::function<double(double, double)>& f, double t0, double x0, double t1, double h,
                  double bound = 1e6) {
    const int n = std::max(1, static_cast<int>(std::ceil(std::abs(t1 - t0) / h)));
    const double dt = (t1 - t0) / n;
    double t = t0, x = x0;
    for (int i = 0; i < n; ++i) {
        const double k1 = f(t, x);
        const double k2 = f(t + dt / 2, x + dt / 2 * k1);
        const double k3 = f(t + dt / 2, x + dt / 2 * k2);
        const double k4 = f(t + dt, x + dt * k3);
        x += dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
        t = t0 + (i + 1) * dt;
        if (!(std::abs(x) < bound)) return x > 0 ? INFINITY : -INFINITY;
    }
    return x;
}

/// x^r_-(t) for the quadratic-arctan model: RK4 from far in the past on the stable branch.
inline double attractor(double zeta, double r, double t, double h = 0.01) {
    const double t0 = -400.0 / r;
    return rk4(quad_arctan_rhs(zeta, r), t0, arctan_ramp(r * t0) + std::sqrt(zeta), t, h);
}

/// x^r_+(t): RK4 backward from far in the future on the unstable branch.
inline double repeller(double zeta, double r, double t, double h = 0.01) {
    const double t0 = 400.0 / r;
    return rk4(quad_arctan_rhs(zeta, r), t0, arctan_ramp(r * t0) - std::sqrt(zeta), t, h);
}

/// Tipping rate by bisection on the sign of x^r_-(0) - x^r_+(0).
inline double tipping_rate(double zeta, double lo, double hi, double width) {
    while (hi - lo > width) {
        const double mid = 0.5 * (lo + hi);
        (attractor(zeta, mid, 0.0) - repeller(zeta, mid, 0.0) > 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace oracle
