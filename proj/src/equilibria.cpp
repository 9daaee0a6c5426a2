#include "rtip/equilibria.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include "rtip/errors.hpp"
#include "rtip/io.hpp"

namespace rtip {

std::string to_string(Stability s) { return s == Stability::stable ? "stable" : "unstable"; }

namespace {

std::optional<double> newton(const ScalarField& f, double x, double lambda, int max_iter = 40) {
    for (int it = 0; it < max_iter; ++it) {
        const double fx = f.eval(x, lambda);
        if (fx == 0.0) return x;
        const double d = f.dfdx(x, lambda);
        if (d == 0.0 || !std::isfinite(d)) return std::nullopt;
        const double step = fx / d;
        x -= step;
        if (!std::isfinite(x)) return std::nullopt;
        if (std::abs(step) <= 4e-16 * (1.0 + std::abs(x))) return x;
    }
    return std::nullopt;
}

// Safeguarded Newton inside a sign-change bracket.
double bracketed_root(const ScalarField& f, double a, double b, double lambda) {
    double fa = f.eval(a, lambda);
    if (fa == 0.0) return a;
    double x = 0.5 * (a + b);
    for (int it = 0; it < 300; ++it) {
        const double fx = f.eval(x, lambda);
        if (fx == 0.0) return x;
        if ((fx < 0) == (fa < 0)) {
            a = x;
            fa = fx;
        } else {
            b = x;
        }
        const double d = f.dfdx(x, lambda);
        double next = d != 0.0 ? x - fx / d : 0.5 * (a + b);
        if (!(next > std::min(a, b) && next < std::max(a, b))) next = 0.5 * (a + b);
        if (std::abs(next - x) <= 2e-16 * (1.0 + std::abs(x)) || std::abs(b - a) <= 4e-16 * (1.0 + std::abs(x)))
            return next;
        x = next;
    }
    return x;
}

// Zero of df/dx inside [a, b] where its sign changes.
double critical_point(const ScalarField& f, double a, double b, double lambda) {
    double da = f.dfdx(a, lambda);
    for (int it = 0; it < 200 && b - a > 2e-16 * (1.0 + std::abs(a)); ++it) {
        const double m = 0.5 * (a + b);
        const double dm = f.dfdx(m, lambda);
        if (dm == 0.0) return m;
        if ((dm < 0) == (da < 0)) {
            a = m;
            da = dm;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

std::string fmt_point(double x, double lambda) {
    std::ostringstream os;
    os.precision(10);
    os << "x=" << x << ", lambda=" << lambda;
    return os.str();
}

}  // namespace

double polish_root(const ScalarField& field, double guess, double lambda) {
    auto r = newton(field, guess, lambda);
    return r ? *r : guess;
}

std::vector<Equilibrium> find_equilibria(const ScalarField& field, double lambda, const RootOptions& opts) {
    const auto& box = field.bound_box();
    const double umin = std::asinh(box.x_min), umax = std::asinh(box.x_max);
    const std::size_t n = std::max<std::size_t>(opts.cells, 1);

    std::vector<double> xs(n + 1), fs(n + 1), ds(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
        xs[k] = std::sinh(umin + (umax - umin) * static_cast<double>(k) / static_cast<double>(n));
        if (std::abs(xs[k]) < 1e-14) xs[k] = 0.0;
        fs[k] = field.eval(xs[k], lambda);
        ds[k] = field.dfdx(xs[k], lambda);
    }
    xs.front() = box.x_min;
    xs.back() = box.x_max;

    std::vector<double> roots;
    for (std::size_t k = 0; k <= n; ++k)
        if (fs[k] == 0.0) roots.push_back(xs[k]);

    for (std::size_t k = 0; k < n; ++k) {
        std::vector<double> pts{xs[k]};
        if ((ds[k] < 0 && ds[k + 1] > 0) || (ds[k] > 0 && ds[k + 1] < 0)) {
            const double c = critical_point(field, xs[k], xs[k + 1], lambda);
            if (std::abs(field.eval(c, lambda)) < opts.root_tolerance)
                throw NonHyperbolicRoot("non-hyperbolic equilibrium near " + fmt_point(c, lambda));
            pts.push_back(c);
        }
        pts.push_back(xs[k + 1]);
        for (std::size_t p = 0; p + 1 < pts.size(); ++p) {
            const double fa = field.eval(pts[p], lambda), fb = field.eval(pts[p + 1], lambda);
            if ((fa < 0 && fb > 0) || (fa > 0 && fb < 0))
                roots.push_back(bracketed_root(field, pts[p], pts[p + 1], lambda));
        }
    }

    std::sort(roots.begin(), roots.end());
    roots.erase(std::unique(roots.begin(), roots.end(),
                            [](double a, double b) { return std::abs(a - b) <= 1e-12 * (1.0 + std::abs(a)); }),
                roots.end());
    if (roots.empty()) {
        std::ostringstream os;
        os << "frozen system has no equilibria at lambda=" << lambda;
        throw NoRoots(os.str());
    }

    std::vector<Equilibrium> out;
    out.reserve(roots.size());
    for (double x : roots) {
        const double d = field.dfdx(x, lambda);
        if (!(std::abs(d) > opts.hyperbolicity_tolerance))
            throw NonHyperbolicRoot("non-hyperbolic equilibrium at " + fmt_point(x, lambda));
        out.push_back({x, lambda, d < 0 ? Stability::stable : Stability::unstable, d});
    }
    return out;
}

QuasiStaticBranch::QuasiStaticBranch(std::shared_ptr<const ScalarField> field, Ramp ramp,
                                     std::shared_ptr<const SlowGrid> grid, Stability kind, std::vector<double> values)
    : field_(std::move(field)), ramp_(ramp), grid_(std::move(grid)), kind_(kind), values_(std::move(values)) {
    const auto& tau = grid_->tau();
    if (values_.size() != tau.size()) throw std::invalid_argument("branch values do not match the grid");
    lambda_values_.resize(tau.size());
    dfdx_values_.resize(tau.size());
    margin_ = INFINITY;
    for (std::size_t k = 0; k < tau.size(); ++k) {
        lambda_values_[k] = ramp_.eval(tau[k]);
        dfdx_values_[k] = field_->dfdx(values_[k], lambda_values_[k]);
        margin_ = std::min(margin_, std::abs(dfdx_values_[k]));
    }
    endpoint_minus_ = polish_root(*field_, values_.front(), ramp_.lambda_minus());
    endpoint_plus_ = polish_root(*field_, values_.back(), ramp_.lambda_plus());
    spline_ = GridSpline(*grid_, values_);
}

double QuasiStaticBranch::value(double tau) const {
    const double guess = spline_.value(tau);
    auto r = newton(*field_, guess, ramp_.eval(tau), 20);
    return r ? *r : guess;
}

namespace {

double implicit_slope(const ScalarField& f, const Ramp& ramp, double x, double tau) {
    const double lambda = ramp.eval(tau);
    return -f.param_deriv(x, lambda) * ramp.deriv(tau) / f.dfdx(x, lambda);
}

struct Tracer {
    const ScalarField& f;
    const Ramp& ramp;
    Stability kind;
    const TraceOptions& opts;

    void check_hyperbolic(double x, double tau) const {
        const double lambda = ramp.eval(tau);
        const double d = f.dfdx(x, lambda);
        const bool sign_ok = kind == Stability::stable ? d < 0 : d > 0;
        if (!sign_ok || std::abs(d) < opts.hyperbolicity_tolerance)
            throw BranchFold("quasi-static branch loses hyperbolicity near " + fmt_point(x, lambda));
    }

    double advance(double x, double t0, double t1, int depth) const {
        const double pred = x + implicit_slope(f, ramp, x, t0) * (t1 - t0);
        const double lambda1 = ramp.eval(t1);
        auto corr = newton(f, pred, lambda1, 25);
        bool ok = corr.has_value();
        if (ok) {
            // Stay within the Newton basin of the tracked root: |f_x| / |f_xx| bounds the
            // distance to the nearest fold or neighbouring root of a locally quadratic f.
            const Jet j = f.jet_eval(x, ramp.eval(t0), 2);
            const double basin = std::abs(j[1]) / std::max(2.0 * std::abs(j[2]), 1e-300);
            const double d1 = f.dfdx(*corr, lambda1);
            const bool sign_ok = kind == Stability::stable ? d1 < 0 : d1 > 0;
            ok = sign_ok && std::abs(*corr - x) <= 0.5 * basin;
        }
        if (ok) return *corr;
        if (depth >= opts.max_substep_depth) {
            check_hyperbolic(pred, t1);
            throw BranchFold("continuation failed to converge near " + fmt_point(pred, lambda1));
        }
        const double mid = 0.5 * (t0 + t1);
        return advance(advance(x, t0, mid, depth + 1), mid, t1, depth + 1);
    }
};

}  // namespace

QuasiStaticBranch trace_branch(std::shared_ptr<const ScalarField> field, const Ramp& ramp, const Equilibrium& seed,
                               std::shared_ptr<const SlowGrid> grid, const TraceOptions& opts) {
    const auto& tau = grid->tau();
    const std::size_t n = tau.size();
    const bool forward = std::abs(seed.lambda - ramp.lambda_minus()) <= std::abs(seed.lambda - ramp.lambda_plus());
    if (std::abs(seed.derivative) < opts.hyperbolicity_tolerance)
        throw BranchFold("seed equilibrium is not hyperbolic");

    Tracer tracer{*field, ramp, seed.stability, opts};
    std::vector<double> values(n);
    const std::size_t start = forward ? 0 : n - 1;
    values[start] = polish_root(*field, seed.x, ramp.eval(tau[start]));
    tracer.check_hyperbolic(values[start], tau[start]);
    for (std::size_t step = 1; step < n; ++step) {
        const std::size_t prev = forward ? step - 1 : n - step;
        const std::size_t cur = forward ? step : n - 1 - step;
        values[cur] = tracer.advance(values[prev], tau[prev], tau[cur], 0);
        tracer.check_hyperbolic(values[cur], tau[cur]);
    }
    return QuasiStaticBranch(std::move(field), ramp, std::move(grid), seed.stability, std::move(values));
}

double branch_derivative(const QuasiStaticBranch& branch, double tau) {
    return implicit_slope(branch.field(), branch.ramp(), branch.value(tau), tau);
}

double min_branch_gap(const QuasiStaticBranch& a, const QuasiStaticBranch& b, double gap_tolerance) {
    if (a.values().size() != b.values().size()) throw std::invalid_argument("branches must share the grid");
    double gap = INFINITY;
    for (std::size_t k = 0; k < a.values().size(); ++k) gap = std::min(gap, std::abs(a.values()[k] - b.values()[k]));
    if (gap < gap_tolerance) {
        std::ostringstream os;
        os << "branch gap " << gap << " below tolerance " << gap_tolerance;
        throw GapCollapse(os.str());
    }
    return gap;
}

std::string branch_csv(const QuasiStaticBranch& branch) {
    CsvWriter csv({"tau", "lambda", "x", "dxf"});
    csv.meta("kind", to_string(branch.kind()));
    csv.meta("margin", branch.margin());
    csv.meta("endpoint_minus", branch.endpoint_minus());
    csv.meta("endpoint_plus", branch.endpoint_plus());
    const auto& tau = branch.grid().tau();
    for (std::size_t k = 0; k < tau.size(); ++k)
        csv.row({tau[k], branch.lambda_values()[k], branch.values()[k], branch.dfdx_values()[k]});
    return csv.str();
}

}  // namespace rtip
