#include "rtip/ramp.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "rtip/errors.hpp"

namespace rtip {

std::string to_string(RampKind kind) {
    switch (kind) {
        case RampKind::arctan: return "arctan";
        case RampKind::tanh: return "tanh";
        case RampKind::logistic: return "logistic";
        case RampKind::constant: return "constant";
    }
    return "unknown";
}

RampKind ramp_kind_from_string(const std::string& name) {
    if (name == "arctan") return RampKind::arctan;
    if (name == "tanh") return RampKind::tanh;
    if (name == "logistic") return RampKind::logistic;
    if (name == "constant") return RampKind::constant;
    throw ConfigError("unknown ramp '" + name + "' (expected arctan, tanh, logistic or constant)");
}

Ramp::Ramp(RampKind kind, double lambda_minus, double lambda_plus, double tail_tolerance)
    : kind_(kind), lambda_minus_(lambda_minus), lambda_plus_(lambda_plus), tail_tolerance_(tail_tolerance) {
    if (!(tail_tolerance > 0.0)) throw ConfigError("ramp tail tolerance must be positive");
    if (kind == RampKind::constant) {
        if (lambda_minus != lambda_plus) throw ConfigError("constant ramp needs lambda_minus == lambda_plus");
        tau_tail_ = 10.0;
        return;
    }
    if (!(lambda_plus > lambda_minus)) throw ConfigError("ramp range must satisfy lambda_minus < lambda_plus");

    // Lambda' is even and decreasing on tau >= 0 for every catalogue shape.
    double lo = 0.0, hi = 1.0;
    while (deriv(hi) > tail_tolerance && hi < 1e15) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (deriv(mid) > tail_tolerance ? lo : hi) = mid;
    }
    tau_tail_ = hi;
}

Ramp Ramp::constant(double lambda) { return Ramp(RampKind::constant, lambda, lambda); }

double Ramp::shape(double tau) const noexcept {
    switch (kind_) {
        case RampKind::arctan: return 2.0 / std::numbers::pi * std::atan(tau);
        case RampKind::tanh: return std::tanh(tau);
        case RampKind::logistic: return std::tanh(0.5 * tau);
        case RampKind::constant: return 0.0;
    }
    return 0.0;
}

double Ramp::shape_deriv(double tau) const noexcept {
    switch (kind_) {
        case RampKind::arctan: return 2.0 / std::numbers::pi / (1.0 + tau * tau);
        case RampKind::tanh: {
            const double s = 1.0 / std::cosh(tau);
            return s * s;
        }
        case RampKind::logistic: {
            const double s = 1.0 / std::cosh(0.5 * tau);
            return 0.5 * s * s;
        }
        case RampKind::constant: return 0.0;
    }
    return 0.0;
}

double Ramp::eval(double tau) const noexcept {
    if (kind_ == RampKind::constant) return lambda_minus_;
    return lambda_minus_ + 0.5 * (lambda_plus_ - lambda_minus_) * (shape(tau) + 1.0);
}

double Ramp::deriv(double tau) const noexcept {
    return 0.5 * (lambda_plus_ - lambda_minus_) * shape_deriv(tau);
}

RampProbe probe_of(const Ramp& ramp) {
    return RampProbe{[ramp](double tau) { return ramp.eval(tau); },
                     [ramp](double tau) { return ramp.deriv(tau); },
                     ramp.lambda_minus(),
                     ramp.lambda_plus(),
                     ramp.tail_tolerance(),
                     ramp.tau_tail()};
}

std::vector<RampViolation> validate_ramp(const Ramp& ramp, std::span<const double> grid) {
    return validate_ramp(probe_of(ramp), grid);
}

std::vector<RampViolation> validate_ramp(const RampProbe& ramp, std::span<const double> grid) {
    std::vector<RampViolation> out;
    auto describe = [](auto&&... parts) {
        std::ostringstream os;
        os.precision(10);
        (os << ... << parts);
        return os.str();
    };

    const double lo = ramp.lambda_minus, hi = ramp.lambda_plus;
    const double tail = ramp.tau_tail;
    double prev_tau = 0.0, prev_val = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double tau = grid[k];
        const double v = ramp.eval(tau);
        const double d = ramp.deriv(tau);
        if (k > 0 && k + 1 < grid.size() && !(d > 0.0) && std::abs(tau) < tail)
            out.push_back({RampViolation::Kind::monotonicity, tau, describe("Lambda'(", tau, ") = ", d, " is not positive")});
        if (!(v >= lo && v <= hi))
            out.push_back({RampViolation::Kind::range, tau, describe("Lambda(", tau, ") = ", v, " outside [", lo, ", ", hi, "]")});
        // Beyond the tail the ramp is flat to working precision.
        if (k > 0 && tau > prev_tau && !(v > prev_val) && std::abs(tau) <= tail && std::abs(prev_tau) <= tail)
            out.push_back({RampViolation::Kind::monotonicity, tau,
                           describe("Lambda not strictly increasing between ", prev_tau, " and ", tau)});
        prev_tau = tau;
        prev_val = v;
    }

    for (double tau : {-tail, tail}) {
        const double d = ramp.deriv(tau);
        if (!(std::abs(d) <= ramp.tail_tolerance))
            out.push_back({RampViolation::Kind::tail_decay, tau,
                           describe("|Lambda'(", tau, ")| = ", std::abs(d), " exceeds tail tolerance ", ramp.tail_tolerance)});
    }
    return out;
}

std::vector<double> default_ramp_grid(const Ramp& ramp, double step) {
    const double tail = ramp.tau_tail();
    const auto n = static_cast<std::size_t>(std::ceil(2.0 * tail / step));
    std::vector<double> g(n + 1);
    for (std::size_t k = 0; k <= n; ++k) g[k] = -tail + 2.0 * tail * static_cast<double>(k) / static_cast<double>(n);
    return g;
}

}  // namespace rtip
