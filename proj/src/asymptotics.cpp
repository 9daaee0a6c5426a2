#include "rtip/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "rtip/errors.hpp"
#include "rtip/io.hpp"

namespace rtip {

SeriesCoefficients::SeriesCoefficients(std::shared_ptr<const QuasiStaticBranch> branch,
                                       std::vector<std::vector<double>> values)
    : branch_(std::move(branch)), values_(std::move(values)) {
    if (values_.empty()) throw std::invalid_argument("series needs at least a_0");
    for (const auto& v : values_) {
        if (v.size() != branch_->grid().size()) throw std::invalid_argument("coefficient length does not match grid");
        splines_.emplace_back(branch_->grid(), v);
        double m = 0.0;
        for (double a : v) m = std::max(m, std::abs(a));
        sup_norms_.push_back(m);
    }
}

double SeriesCoefficients::coefficient(int i, double tau) const {
    if (i < 0 || i > order()) throw std::out_of_range("coefficient index out of range");
    if (i == 0) return branch_->value(tau);
    if (i == 1) {
        const double x = branch_->value(tau);
        return branch_derivative(*branch_, tau) / branch_->field().dfdx(x, branch_->ramp().eval(tau));
    }
    if (tau < grid().tau_min() || tau > grid().tau_max()) return 0.0;
    return splines_[static_cast<std::size_t>(i)].value(tau);
}

double SeriesCoefficients::coefficient_derivative(int i, double tau) const {
    if (i < 0 || i > order()) throw std::out_of_range("coefficient index out of range");
    return splines_[static_cast<std::size_t>(i)].derivative(tau);
}

double SeriesCoefficients::partial_sum_slow(double r, double tau, int m) const {
    if (m < 0 || m > order()) throw std::out_of_range("partial sum order out of range");
    double sum = 0.0, rp = 1.0;
    for (int i = 0; i <= m; ++i) {
        sum += coefficient(i, tau) * rp;
        rp *= r;
    }
    return sum;
}

double SeriesCoefficients::partial_sum(double r, double t, int m) const { return partial_sum_slow(r, r * t, m); }

std::vector<std::vector<int>> compositions(int total, int parts) {
    std::vector<std::vector<int>> out;
    if (parts <= 0 || total < parts) return out;
    std::vector<int> cur;
    auto rec = [&](auto&& self, int remaining, int left) -> void {
        if (left == 1) {
            cur.push_back(remaining);
            out.push_back(cur);
            cur.pop_back();
            return;
        }
        for (int k = 1; k <= remaining - (left - 1); ++k) {
            cur.push_back(k);
            self(self, remaining - k, left - 1);
            cur.pop_back();
        }
    };
    rec(rec, total, parts);
    return out;
}

SeriesCoefficients compute_coefficients(std::shared_ptr<const QuasiStaticBranch> branch, int n,
                                        double hyperbolicity_tolerance) {
    if (n < 0) throw ConfigError("series order must be non-negative");
    if (n > kMaxSeriesOrder) {
        std::ostringstream os;
        os << "series order " << n << " exceeds the supported maximum " << kMaxSeriesOrder;
        throw OrderTooHigh(os.str());
    }
    const auto& grid = branch->grid();
    const auto& field = branch->field();
    const auto& ramp = branch->ramp();
    const std::size_t N = grid.size();

    std::vector<Jet> jets;
    jets.reserve(N);
    for (std::size_t k = 0; k < N; ++k) {
        Jet jet = field.jet_eval(branch->values()[k], branch->lambda_values()[k], std::max(n, 1));
        if (std::abs(jet[1]) < hyperbolicity_tolerance) {
            std::ostringstream os;
            os << "|df/dx| = " << std::abs(jet[1]) << " on the branch at tau=" << grid.tau()[k];
            throw MarginLoss(os.str());
        }
        jets.push_back(std::move(jet));
    }

    std::vector<std::vector<double>> a;
    a.push_back(branch->values());
    if (n >= 1) {
        std::vector<double> a1(N);
        for (std::size_t k = 0; k < N; ++k) {
            const double tau = grid.tau()[k];
            const double x = branch->values()[k];
            const double lambda = branch->lambda_values()[k];
            a1[k] = -field.param_deriv(x, lambda) * ramp.deriv(tau) / (jets[k][1] * jets[k][1]);
        }
        a.push_back(std::move(a1));
    }
    for (int i = 2; i <= n; ++i) {
        const GridSpline prev(grid, a[static_cast<std::size_t>(i - 1)]);
        std::vector<std::vector<std::vector<int>>> comps(static_cast<std::size_t>(i + 1));
        for (int j = 2; j <= i; ++j) comps[static_cast<std::size_t>(j)] = compositions(i, j);
        std::vector<double> ai(N);
        for (std::size_t k = 0; k < N; ++k) {
            double rhs = prev.derivative(grid.tau()[k]);
            for (int j = 2; j <= i; ++j) {
                double s = 0.0;
                for (const auto& c : comps[static_cast<std::size_t>(j)]) {
                    double p = 1.0;
                    for (int idx : c) p *= a[static_cast<std::size_t>(idx)][k];
                    s += p;
                }
                rhs -= jets[k][j] * s;
            }
            ai[k] = rhs / jets[k][1];
        }
        a.push_back(std::move(ai));
    }
    return SeriesCoefficients(std::move(branch), std::move(a));
}

namespace {

bool sign_holds(const SeriesCoefficients& s, double r) {
    const auto& grid = s.grid();
    const auto& field = s.branch().field();
    const double want = s.kind() == Stability::stable ? -1.0 : 1.0;
    const int n = s.order();
    for (std::size_t k = 0; k < grid.size(); ++k) {
        double sum = 0.0, rp = 1.0;
        for (int i = 0; i <= n; ++i) {
            sum += s.values()[static_cast<std::size_t>(i)][k] * rp;
            rp *= r;
        }
        if (!(want * field.dfdx(sum, s.branch().lambda_values()[k]) > 0.0)) return false;
    }
    return true;
}

}  // namespace

double validity_radius(const SeriesCoefficients& series, double r_probe_max, double rel_tol) {
    if (!(r_probe_max > 0.0)) throw PreconditionError("probe radius must be positive");
    constexpr int kScan = 60;
    const double r_min = r_probe_max * 1e-6;
    if (!sign_holds(series, r_min)) return 0.0;
    double good = r_min, bad = 0.0;
    for (int s = 1; s <= kScan; ++s) {
        const double r = r_min * std::pow(r_probe_max / r_min, static_cast<double>(s) / kScan);
        if (sign_holds(series, r)) {
            good = r;
        } else {
            bad = r;
            break;
        }
    }
    if (bad == 0.0) return r_probe_max;
    while (bad - good > rel_tol * good) {
        const double mid = 0.5 * (good + bad);
        (sign_holds(series, mid) ? good : bad) = mid;
    }
    return good;
}

void fit_loglog(const std::vector<double>& x, const std::vector<double>& y, double& slope, double& intercept,
                double& residual) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
        if (x[i] > 0.0 && y[i] > 0.0 && std::isfinite(y[i])) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    }
    slope = intercept = residual = NAN;
    const double m = static_cast<double>(lx.size());
    if (lx.size() < 2) return;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    const double den = m * sxx - sx * sx;
    if (den == 0.0) return;
    slope = (m * sxy - sx * sy) / den;
    intercept = (sy - slope * sx) / m;
    double ss = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        const double e = ly[i] - (intercept + slope * lx[i]);
        ss += e * e;
    }
    residual = std::sqrt(ss / m);
}

ErrorFit estimate_error_constant(const SeriesCoefficients& series, const ModelSpec& model, const ErrorFitOptions& opts) {
    std::vector<double> rs = opts.r_samples;
    if (rs.empty())
        for (int i = 0; i < 10; ++i) rs.push_back(1e-3 * std::pow(100.0, i / 9.0));
    const int n = series.order();
    ErrorFit fit;
    PullbackOptions popt;
    popt.tol = opts.pullback_tol;
    for (double r : rs) {
        const double t_lo = -opts.window / r, t_hi = opts.window / r;
        const PullbackSolution sol =
            series.kind() == Stability::stable
                ? estimate_pullback_attractor(model, series.branch(), r, t_lo, t_hi, popt)
                : estimate_pullback_repeller(model, series.branch(), r, t_lo, t_hi, popt);
        double e = 0.0;
        if (sol.t_hi < t_hi || sol.t_lo > t_lo) e = INFINITY;
        for (const auto& s : sol.trajectory.samples())
            e = std::max(e, std::abs(series.partial_sum(r, s.t, n) - s.x));
        fit.r.push_back(r);
        fit.error.push_back(e);
        fit.constant = std::max(fit.constant, e / std::pow(r, n + 1));
    }
    fit_loglog(fit.r, fit.error, fit.slope, fit.intercept, fit.residual);
    return fit;
}

double validity_boundary(const SeriesCoefficients& series, const PullbackSolution& pb, double r, int n, double eps,
                         double radius, double error_constant) {
    if (!(eps > 0.0)) throw PreconditionError("epsilon must be positive");
    const bool stable = pb.side == PullbackSide::attractor;
    const auto& samples = pb.trajectory.samples();
    auto err = [&](double t) { return std::abs(series.partial_sum(r, t, n) - pb.trajectory.eval(t)); };
    const double threshold =
        error_constant > 0.0 ? std::pow(eps / error_constant, 1.0 / (n + 1)) : INFINITY;
    const bool small_r = r < std::min(radius, threshold);

    // Walk away from the side where the series is anchored.
    const std::size_t m = samples.size();
    for (std::size_t q = 0; q < m; ++q) {
        const std::size_t k = stable ? q : m - 1 - q;
        if (err(samples[k].t) < eps) continue;
        if (q == 0) return samples[k].t;
        double good = samples[stable ? k - 1 : k + 1].t, bad = samples[k].t;
        for (int it = 0; it < 60 && std::abs(bad - good) > 1e-12 * (1.0 + std::abs(good)); ++it) {
            const double mid = 0.5 * (good + bad);
            (err(mid) < eps ? good : bad) = mid;
        }
        return good;
    }
    if (pb.escaped()) return stable ? pb.t_hi : pb.t_lo;
    if (small_r) return stable ? INFINITY : -INFINITY;
    return stable ? pb.t_hi : pb.t_lo;
}

std::string coefficients_csv(const SeriesCoefficients& series) {
    std::vector<std::string> cols{"tau"};
    for (int i = 0; i <= series.order(); ++i) cols.push_back("a_" + std::to_string(i));
    CsvWriter csv(cols);
    csv.meta("kind", to_string(series.kind()));
    csv.meta("order", std::to_string(series.order()));
    for (std::size_t k = 0; k < series.grid().size(); ++k) {
        std::vector<double> row{series.grid().tau()[k]};
        for (const auto& v : series.values()) row.push_back(v[k]);
        csv.row(row);
    }
    return csv.str();
}

std::string series_summary_json(const SeriesApproximation& approx) {
    using nlohmann::ordered_json;
    const auto& s = approx.coefficients;
    ordered_json j;
    j["kind"] = to_string(s.kind());
    j["order"] = s.order();
    j["sup_norms"] = s.sup_norms();
    j["validity_radius"] = approx.validity_radius;
    j["error_constant"] = approx.fit.constant;
    j["slope"] = approx.fit.slope;
    j["fit_residual"] = approx.fit.residual;
    ordered_json pts = ordered_json::array();
    for (std::size_t i = 0; i < approx.fit.r.size(); ++i) pts.push_back({approx.fit.r[i], approx.fit.error[i]});
    j["fit_points"] = pts;
    return j.dump(2) + "\n";
}

}  // namespace rtip
