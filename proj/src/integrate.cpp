#include "rtip/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rtip/errors.hpp"
#include "rtip/io.hpp"

namespace rtip {

std::string to_string(TrajectoryStatus s) {
    switch (s) {
        case TrajectoryStatus::completed: return "completed";
        case TrajectoryStatus::escaped: return "escaped";
        case TrajectoryStatus::tolerance_failure: return "tolerance_failure";
    }
    return "unknown";
}

namespace {

double hermite(const TrajectorySample& a, const TrajectorySample& b, double t) {
    const double h = b.t - a.t;
    const double s = (t - a.t) / h;
    const double s2 = s * s, s3 = s2 * s, s4 = s3 * s, s5 = s4 * s;
    const double h0 = 1 - 10 * s3 + 15 * s4 - 6 * s5;
    const double h1 = s - 6 * s3 + 8 * s4 - 3 * s5;
    const double h2 = 0.5 * (s2 - 3 * s3 + 3 * s4 - s5);
    const double h3 = 10 * s3 - 15 * s4 + 6 * s5;
    const double h4 = -4 * s3 + 7 * s4 - 3 * s5;
    const double h5 = 0.5 * (s3 - 2 * s4 + s5);
    return a.x * h0 + h * a.dx * h1 + h * h * a.ddx * h2 + b.x * h3 + h * b.dx * h4 + h * h * b.ddx * h5;
}

TrajectorySample make_sample(const ModelSpec& m, double r, double t, double x) {
    const double tau = r * t;
    const double lambda = m.ramp.eval(tau);
    const double f = m.field->eval(x, lambda);
    const double ddx = m.field->dfdx(x, lambda) * f + m.field->param_deriv(x, lambda) * r * m.ramp.deriv(tau);
    return {t, x, f, ddx};
}

}  // namespace

Trajectory::Trajectory(double r, double t0, double x0, std::vector<TrajectorySample> samples, TrajectoryStatus status,
                       std::optional<double> escape_time)
    : r_(r), t0_(t0), x0_(x0), samples_(std::move(samples)), status_(status), escape_time_(escape_time) {}

double Trajectory::eval(double t) const {
    if (samples_.empty()) throw std::out_of_range("empty trajectory");
    if (samples_.size() == 1) return samples_.front().x;
    if (t < t_begin() || t > t_end()) {
        std::ostringstream os;
        os << "t=" << t << " outside trajectory range [" << t_begin() << ", " << t_end() << "]";
        throw std::out_of_range(os.str());
    }
    auto it = std::upper_bound(samples_.begin(), samples_.end(), t,
                               [](double v, const TrajectorySample& s) { return v < s.t; });
    std::size_t k = static_cast<std::size_t>(it - samples_.begin());
    k = std::clamp<std::size_t>(k, 1, samples_.size() - 1);
    return hermite(samples_[k - 1], samples_[k], t);
}

double Trajectory::value_or_escape(double t) const {
    if (covers(t)) return eval(t);
    if (escaped()) {
        const bool forward_escape = escape_time_ && *escape_time_ >= t0_;
        if (forward_escape && t > t_end()) return std::copysign(INFINITY, samples_.back().x);
        if (!forward_escape && t < t_begin()) return std::copysign(INFINITY, samples_.front().x);
    }
    return eval(t);
}

double Trajectory::final_state() const {
    const bool backward = samples_.size() > 1 && samples_.front().t < t0_;
    return backward ? samples_.front().x : samples_.back().x;
}

Trajectory solve_ivp(const ModelSpec& model, double r, double t0, double x0, double t1, const IntegratorOptions& opts) {
    if (!(r > 0.0)) throw PreconditionError("rate r must be positive");
    if (!(opts.tol > 0.0)) throw PreconditionError("integration tolerance must be positive");
    if (t1 == t0) throw PreconditionError("integration interval is empty");

    // Dormand-Prince 5(4) tableau.
    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                     a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                     e6 = 22.0 / 525, e7 = -1.0 / 40;

    const double dir = t1 > t0 ? 1.0 : -1.0;
    const double span = std::abs(t1 - t0);
    const double h_min = 1e-12 * span;
    const double h_max = opts.h_max > 0.0 ? std::min(opts.h_max, span) : span;
    const double x_esc = opts.escape_fraction * model.field->bound_box().x_max;
    const double tol = opts.tol;
    auto rhs = [&](double t, double x) { return model.rhs(r, t, x); };
    auto scale = [&](double a, double b) { return tol * (1.0 + std::max(std::abs(a), std::abs(b))); };

    std::vector<TrajectorySample> samples;
    samples.push_back(make_sample(model, r, t0, x0));
    auto finish = [&](TrajectoryStatus st, std::optional<double> t_esc) {
        if (dir < 0) std::reverse(samples.begin(), samples.end());
        return Trajectory(r, t0, x0, std::move(samples), st, t_esc);
    };
    if (!(std::abs(x0) < x_esc)) return finish(TrajectoryStatus::escaped, t0);

    double t = t0, x = x0;
    double k1 = samples.back().dx;

    // Initial step (Hairer-Norsett-Wanner heuristic).
    double h;
    {
        const double sc = scale(x, x);
        const double d0 = std::abs(x) / sc, d1 = std::abs(k1) / sc;
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h0 = std::min(h0, h_max);
        const double k2 = rhs(t + dir * h0, x + dir * h0 * k1);
        const double d2 = std::abs(k2 - k1) / sc / h0;
        const double h1 = std::max(d1, d2) <= 1e-15 ? std::max(1e-6, h0 * 1e-3)
                                                   : std::pow(0.01 / std::max(d1, d2), 1.0 / 5.0);
        h = std::min({100 * h0, h1, h_max});
    }

    double err_prev = 1e-4;
    bool rejected = false;
    for (std::size_t step = 0; step < opts.max_steps; ++step) {
        const double remaining = std::abs(t1 - t);
        if (remaining <= 0.0) return finish(TrajectoryStatus::completed, std::nullopt);
        bool last = false;
        if (h >= remaining) {
            h = remaining;
            last = true;
        }
        if (h < h_min && !last) {
            std::ostringstream os;
            os << "step size underflow at t=" << t << " (x=" << x << ")";
            throw ToleranceFailure(os.str());
        }
        const double hs = dir * h;
        const double k2 = rhs(t + c2 * hs, x + hs * a21 * k1);
        const double k3 = rhs(t + c3 * hs, x + hs * (a31 * k1 + a32 * k2));
        const double k4 = rhs(t + c4 * hs, x + hs * (a41 * k1 + a42 * k2 + a43 * k3));
        const double k5 = rhs(t + c5 * hs, x + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const double k6 = rhs(t + hs, x + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        const double xn = x + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        const double tn = last ? t1 : t + hs;
        const double k7 = rhs(tn, xn);
        const double errv = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const double err = std::abs(errv) / scale(x, xn);

        if (!std::isfinite(err) || !std::isfinite(xn)) {
            h *= 0.1;
            rejected = true;
            continue;
        }
        if (err > 1.0) {
            h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
            rejected = true;
            continue;
        }

        // Accepted.
        TrajectorySample next = make_sample(model, r, tn, xn);
        next.dx = k7;
        if (std::abs(xn) >= x_esc) {
            const TrajectorySample& prev = samples.back();
            const TrajectorySample& a = dir > 0 ? prev : next;
            const TrajectorySample& b = dir > 0 ? next : prev;
            const double target = std::copysign(x_esc, xn);
            double lo = t, hi = tn;  // lo: below threshold, hi: at/above
            for (int it = 0; it < 100; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double v = hermite(a, b, mid);
                (std::abs(v) >= x_esc || (v > 0) != (target > 0) ? hi : lo) = mid;
                if (std::abs(hi - lo) <= 1e-15 * (1.0 + std::abs(hi))) break;
            }
            samples.push_back(make_sample(model, r, hi, target));
            return finish(TrajectoryStatus::escaped, hi);
        }
        samples.push_back(next);
        t = tn;
        x = xn;
        k1 = k7;

        // PI controller.
        const double e = std::max(err, 1e-10);
        double fac = 0.9 * std::pow(e, -0.17) * std::pow(err_prev, 0.04);
        fac = std::clamp(fac, 0.2, 5.0);
        if (rejected) fac = std::min(fac, 1.0);
        h = std::min(h * fac, h_max);
        err_prev = e;
        rejected = false;
        if (last) return finish(TrajectoryStatus::completed, std::nullopt);
    }
    throw ToleranceFailure("maximum number of integration steps exceeded");
}

namespace {

Trajectory restrict_to(const ModelSpec& model, const Trajectory& full, double lo, double hi) {
    std::vector<TrajectorySample> out;
    const double r = full.r();
    lo = std::max(lo, full.t_begin());
    hi = std::min(hi, full.t_end());
    if (lo >= hi) return full;
    out.push_back(make_sample(model, r, lo, full.eval(lo)));
    for (const auto& s : full.samples())
        if (s.t > lo && s.t < hi) out.push_back(s);
    if (hi == full.t_end()) out.push_back(full.samples().back());
    else out.push_back(make_sample(model, r, hi, full.eval(hi)));
    return Trajectory(r, full.t0(), full.x0(), std::move(out), full.status(), full.escape_time());
}

PullbackSolution pullback(const ModelSpec& model, const QuasiStaticBranch& branch, double r, double t_lo, double t_hi,
                          const PullbackOptions& opts, PullbackSide side) {
    if (!(r > 0.0)) throw PreconditionError("rate r must be positive");
    if (!(t_hi > t_lo)) throw PreconditionError("pullback window must satisfy t_lo < t_hi");
    const double ds = opts.anchor_spacing > 0.0 ? opts.anchor_spacing : 10.0 / r;
    const std::size_t nck = std::max<std::size_t>(opts.checkpoints, 2);
    std::vector<double> checks(nck);
    for (std::size_t i = 0; i < nck; ++i)
        checks[i] = t_lo + (t_hi - t_lo) * static_cast<double>(i) / static_cast<double>(nck - 1);

    IntegratorOptions iopt;
    iopt.tol = 0.1 * opts.tol;

    PullbackSolution sol;
    sol.side = side;
    sol.r = r;
    double branch_scale = 0.0;
    for (double v : branch.values()) branch_scale = std::max(branch_scale, std::abs(v));
    const double blowup = 10.0 * (1.0 + branch_scale);
    Trajectory prev;
    bool have_prev = false;
    for (std::size_t k = 1; k <= opts.max_anchors; ++k) {
        const double s = side == PullbackSide::attractor ? t_lo - static_cast<double>(k) * ds
                                                         : t_hi + static_cast<double>(k) * ds;
        const double x0 = branch.value(r * s);
        const double target = side == PullbackSide::attractor ? t_hi : t_lo;
        Trajectory cur = solve_ivp(model, r, s, x0, target, iopt);
        sol.anchor_times.push_back(s);
        if (have_prev) {
            double gap = 0.0;
            if (cur.escaped() != prev.escaped()) gap = INFINITY;
            for (double tc : checks) {
                if (!cur.covers(tc) || !prev.covers(tc)) continue;
                const double a = cur.eval(tc), b = prev.eval(tc);
                // Near a blow-up only the escape itself is meaningful.
                if (std::abs(a) > blowup && std::abs(b) > blowup) continue;
                gap = std::max(gap, std::abs(a - b) / (1.0 + std::min(std::abs(a), std::abs(b))));
            }
            sol.anchor_gaps.push_back(gap);
            const auto& g = sol.anchor_gaps;
            bool stalled = false;
            if (g.size() >= 3 && gap < opts.noise_floor_limit) {
                const auto [lo, hi] = std::minmax({g[g.size() - 1], g[g.size() - 2], g[g.size() - 3]});
                stalled = lo >= 0.1 * hi;
            }
            if (gap < opts.tol || stalled) {
                sol.noise_limited = gap >= opts.tol;
                sol.convergence_gap = gap;
                double lo = t_lo, hi = t_hi;
                if (cur.escaped()) {
                    if (side == PullbackSide::attractor) hi = std::min(hi, *cur.escape_time());
                    else lo = std::max(lo, *cur.escape_time());
                }
                sol.t_lo = lo;
                sol.t_hi = hi;
                sol.trajectory = restrict_to(model, cur, lo, hi);
                return sol;
            }
        }
        prev = std::move(cur);
        have_prev = true;
    }
    std::ostringstream os;
    os << (side == PullbackSide::attractor ? "pullback attractor" : "pullback repeller") << " estimate at r=" << r
       << " did not converge after " << opts.max_anchors << " anchors (last gap "
       << (sol.anchor_gaps.empty() ? INFINITY : sol.anchor_gaps.back()) << ")";
    throw NoConvergence(os.str());
}

}  // namespace

PullbackSolution estimate_pullback_attractor(const ModelSpec& model, const QuasiStaticBranch& stable, double r,
                                             double t_lo, double t_hi, const PullbackOptions& opts) {
    if (stable.kind() != Stability::stable) throw PreconditionError("attractor estimate needs the stable branch");
    return pullback(model, stable, r, t_lo, t_hi, opts, PullbackSide::attractor);
}

PullbackSolution estimate_pullback_repeller(const ModelSpec& model, const QuasiStaticBranch& unstable, double r,
                                            double t_lo, double t_hi, const PullbackOptions& opts) {
    if (unstable.kind() != Stability::unstable) throw PreconditionError("repeller estimate needs the unstable branch");
    return pullback(model, unstable, r, t_lo, t_hi, opts, PullbackSide::repeller);
}

std::string trajectory_csv(const Trajectory& traj) {
    CsvWriter csv({"t", "x"});
    csv.meta("r", traj.r());
    csv.meta("t0", traj.t0());
    csv.meta("x0", traj.x0());
    csv.meta("status", to_string(traj.status()));
    if (traj.escape_time()) csv.meta("escape_time", *traj.escape_time());
    for (const auto& s : traj.samples()) csv.row({s.t, s.x});
    return csv.str();
}

}  // namespace rtip
