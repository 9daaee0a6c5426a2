#include "rtip/tipping.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "rtip/errors.hpp"
#include "rtip/io.hpp"

namespace rtip {

TippingSetup make_tipping_setup(const ModelSpec& model, int order, const SetupOptions& opts) {
    TippingSetup s{model, order, nullptr, nullptr, nullptr, nullptr, nullptr, 0.0, 1.0};
    s.grid = std::make_shared<SlowGrid>(model.ramp.tau_tail(), opts.grid_points, opts.grid_scale);

    const auto minus = find_equilibria(*model.field, model.ramp.lambda_minus());
    auto it = std::find_if(minus.begin(), minus.end(), [](const Equilibrium& e) { return e.stability == Stability::stable; });
    if (it == minus.end()) throw NoRoots("no stable equilibrium at lambda_minus");
    s.stable = std::make_shared<QuasiStaticBranch>(trace_branch(model.field, model.ramp, *it, s.grid));

    const auto plus = find_equilibria(*model.field, model.ramp.lambda_plus());
    const Equilibrium* best = nullptr;
    for (const auto& e : plus) {
        if (e.stability != Stability::unstable) continue;
        if (!best || std::abs(e.x - s.stable->endpoint_plus()) < std::abs(best->x - s.stable->endpoint_plus()))
            best = &e;
    }
    if (!best) throw NoRoots("no unstable equilibrium at lambda_plus");
    s.unstable = std::make_shared<QuasiStaticBranch>(trace_branch(model.field, model.ramp, *best, s.grid));

    s.gap = min_branch_gap(*s.stable, *s.unstable);
    s.orientation = s.stable->values()[s.grid->size() / 2] > s.unstable->values()[s.grid->size() / 2] ? 1.0 : -1.0;
    s.series_s = std::make_shared<SeriesCoefficients>(compute_coefficients(s.stable, order));
    s.series_u = std::make_shared<SeriesCoefficients>(compute_coefficients(s.unstable, order));
    return s;
}

namespace {

ProbeValue run_probe(const TippingSetup& s, double r, double t0, double x0, const ProbeOptions& opts) {
    if (t0 == 0.0) return {x0, false, std::nullopt};
    IntegratorOptions io;
    io.tol = opts.tol;
    const Trajectory tr = solve_ivp(s.model, r, t0, x0, 0.0, io);
    return {tr.value_or_escape(0.0), tr.escaped(), tr.escape_time()};
}

DiscriminantValue difference(double sigma, const ProbeValue& a, const ProbeValue& b) {
    DiscriminantValue d;
    d.value = sigma * (a.value - b.value);
    d.escape_verdict = a.escaped || b.escaped;
    if (std::isnan(d.value)) d.value = 0.0;
    return d;
}

void check_order(const TippingSetup& s, int n) {
    if (n < 0 || n > s.order) {
        std::ostringstream os;
        os << "probe order " << n << " not available (setup order " << s.order << ")";
        throw ConfigError(os.str());
    }
}

}  // namespace

ProbeStates probe_solutions(const TippingSetup& s, const ProbeConfig& c, const ProbeOptions& opts) {
    check_order(s, c.n);
    if (!(c.r > 0.0)) throw PreconditionError("rate r must be positive");
    if (!(c.tau >= 0.0)) throw PreconditionError("probe horizon tau must be non-negative");
    const double sigma = s.orientation;
    const double ss = s.series_s->partial_sum(c.r, -c.tau, c.n);
    const double su = s.series_u->partial_sum(c.r, c.tau, c.n);
    ProbeStates p;
    p.y_minus = run_probe(s, c.r, -c.tau, ss + sigma * c.epsilon, opts);
    p.z_minus = run_probe(s, c.r, -c.tau, ss - sigma * c.epsilon, opts);
    p.y_plus = run_probe(s, c.r, c.tau, su - sigma * c.epsilon, opts);
    p.z_plus = run_probe(s, c.r, c.tau, su + sigma * c.epsilon, opts);
    return p;
}

DiscriminantSample discriminants(const TippingSetup& s, const ProbeConfig& c, const ProbeOptions& opts) {
    DiscriminantSample d;
    d.config = c;
    d.probes = probe_solutions(s, c, opts);
    d.d_out = difference(s.orientation, d.probes.y_minus, d.probes.y_plus);
    d.d_in = difference(s.orientation, d.probes.z_minus, d.probes.z_plus);
    return d;
}

DiscriminantValue d_out(const TippingSetup& s, const ProbeConfig& c, const ProbeOptions& opts) {
    check_order(s, c.n);
    const double ss = s.series_s->partial_sum(c.r, -c.tau, c.n);
    const double su = s.series_u->partial_sum(c.r, c.tau, c.n);
    const double sigma = s.orientation;
    return difference(sigma, run_probe(s, c.r, -c.tau, ss + sigma * c.epsilon, opts),
                      run_probe(s, c.r, c.tau, su - sigma * c.epsilon, opts));
}

DiscriminantValue d_in(const TippingSetup& s, const ProbeConfig& c, const ProbeOptions& opts) {
    check_order(s, c.n);
    const double ss = s.series_s->partial_sum(c.r, -c.tau, c.n);
    const double su = s.series_u->partial_sum(c.r, c.tau, c.n);
    const double sigma = s.orientation;
    return difference(sigma, run_probe(s, c.r, -c.tau, ss - sigma * c.epsilon, opts),
                      run_probe(s, c.r, c.tau, su + sigma * c.epsilon, opts));
}

double oracle_gap_at_zero(const TippingSetup& s, double r, double tol) {
    PullbackOptions po;
    po.tol = tol;
    const auto a = estimate_pullback_attractor(s.model, *s.stable, r, -1.0, 1.0, po);
    const auto b = estimate_pullback_repeller(s.model, *s.unstable, r, -1.0, 1.0, po);
    const double g = s.orientation * (a.value(0.0) - b.value(0.0));
    return std::isnan(g) ? 0.0 : g;
}

std::string to_string(Classification c) {
    switch (c) {
        case Classification::end_point_tracking: return "end_point_tracking";
        case Classification::tipping: return "tipping";
        case Classification::visible_tipping: return "visible_tipping";
        case Classification::undetermined: return "undetermined";
    }
    return "unknown";
}

TippingReport detect_tipping(const TippingSetup& s, const DetectOptions& o) {
    if (!(o.epsilon > 0.0) || !(o.epsilon < 0.5 * s.gap)) {
        std::ostringstream os;
        os << "epsilon = " << o.epsilon << " violates 0 < epsilon < d_0/2 = " << 0.5 * s.gap;
        throw ConfigError(os.str());
    }
    if (!(o.r_min > 0.0) || !(o.r_max > o.r_min)) throw ConfigError("r-range must satisfy 0 < r_min < r_max");
    if (!(o.tau >= 0.0)) throw ConfigError("tau must be non-negative");
    if (o.scan_points < 2) throw ConfigError("scan needs at least two points");

    TippingReport rep;
    rep.model = s.model.name;
    rep.n = s.order;
    rep.epsilon = o.epsilon;
    rep.tau = o.tau;
    rep.r_min = o.r_min;
    rep.r_max = o.r_max;

    auto sample = [&](double r, double tau) {
        DiscriminantSample d = discriminants(s, {s.order, o.epsilon, tau, r}, o.probe);
        rep.escape_verdicts = rep.escape_verdicts || d.d_out.escape_verdict || d.d_in.escape_verdict;
        rep.evidence.push_back(d);
        return d;
    };

    for (double tau : {0.0, 0.5 * o.tau, o.tau}) {
        const auto d = sample(o.r_min, tau);
        if (d.d_out.sign() <= 0 || d.d_in.sign() <= 0) {
            std::ostringstream os;
            os << "r_min = " << o.r_min << " is not in the tracking regime (tau=" << tau
               << ": d_out=" << d.d_out.value << ", d_in=" << d.d_in.value << ")";
            throw PreconditionError(os.str());
        }
    }

    std::vector<double> rs(o.scan_points);
    std::vector<int> signs(o.scan_points);
    for (std::size_t k = 0; k < o.scan_points; ++k) {
        rs[k] = o.r_min * std::pow(o.r_max / o.r_min, static_cast<double>(k) / static_cast<double>(o.scan_points - 1));
        signs[k] = sample(rs[k], o.tau).d_out.sign() > 0 ? 1 : -1;
        if (k > 0 && signs[k] != signs[k - 1]) rep.brackets.emplace_back(rs[k - 1], rs[k]);
    }

    auto finish_indicator = [&](double hi) {
        if (o.indicator_samples == 0) return;
        for (std::size_t k = 0; k < o.indicator_samples; ++k) {
            const double frac = o.indicator_samples == 1 ? 0.0 : static_cast<double>(k) / (o.indicator_samples - 1);
            const double r = o.r_min * std::pow(hi / o.r_min, frac);
            rep.indicator_curve.push_back({r, stability_indicator(s, r)});
        }
        rep.indicator_crossing = indicator_crossing(s, o.r_min, hi);
    };

    if (rep.brackets.empty()) {
        rep.classification = Classification::end_point_tracking;
        rep.note = "no sign change of d_out on the scanned range";
        finish_indicator(o.r_max);
        return rep;
    }

    double a = rep.brackets.front().first, b = rep.brackets.front().second;
    while (b - a > o.rel_width * a) {
        const double mid = 0.5 * (a + b);
        ((sample(mid, o.tau).d_out.sign() > 0) ? a : b) = mid;
    }
    rep.r_lo = a;
    rep.r_hi = b;
    rep.r_star = 0.5 * (a + b);
    rep.r_star_uncertainty = 0.5 * (b - a);

    bool visible = rep.brackets.size() == 1;
    for (double f : {0.0, 0.25, 0.5, 0.75, 1.0, 2.0})
        visible = visible && sample(a, f * o.tau).d_out.sign() > 0;
    for (double f : {1.0, 1.25, 1.5, 2.0})
        visible = visible && sample(b, f * o.tau).d_out.sign() < 0;
    rep.classification = visible ? Classification::visible_tipping : Classification::tipping;
    if (rep.brackets.size() > 1) rep.note = "multiple sign changes of d_out in the coarse scan";

    if (o.oracle_check) {
        try {
            const double lo = oracle_gap_at_zero(s, a * (1.0 - o.oracle_margin), o.probe.tol);
            const double hi = oracle_gap_at_zero(s, b * (1.0 + o.oracle_margin), o.probe.tol);
            if (!(lo > 0.0 && hi < 0.0)) {
                std::ostringstream os;
                os << "inconsistent evidence: pullback gap at zero is " << lo << " below and " << hi
                   << " above the bracket";
                rep.note = os.str();
                rep.classification = Classification::undetermined;
            }
        } catch (const NoConvergence& e) {
            rep.note = std::string("inconsistent evidence: oracle failed: ") + e.what();
            rep.classification = Classification::undetermined;
        }
    }

    if (!o.delta_taus.empty()) rep.delta_curve = delta_curve(s, o.epsilon, *rep.r_star, o.delta_taus, o.probe);
    if (!o.settle_taus.empty()) {
        std::vector<double> taus = o.settle_taus;
        std::sort(taus.begin(), taus.end());
        auto settled = [&](auto holds) -> std::optional<double> {
            std::optional<double> from;
            for (auto it = taus.rbegin(); it != taus.rend() && holds(*it); ++it) from = *it;
            return from;
        };
        rep.tau_out_settled = settled([&](double tau) {
            return d_out(s, {s.order, o.epsilon, tau, a}, o.probe).sign() > 0 &&
                   d_out(s, {s.order, o.epsilon, tau, b}, o.probe).sign() < 0;
        });
        rep.tau_in_settled =
            settled([&](double tau) { return d_in(s, {s.order, o.epsilon, tau, a}, o.probe).sign() > 0; });
    }
    finish_indicator(b);
    return rep;
}

std::vector<DeltaSample> delta_curve(const TippingSetup& s, double epsilon, double r_star,
                                     const std::vector<double>& taus, const ProbeOptions& opts) {
    std::vector<DeltaSample> out;
    const double floor_r = 1e-3 * r_star;
    const double step = 0.01 * r_star;
    auto negative = [&](double tau, double r) { return d_in(s, {s.order, epsilon, tau, r}, opts).sign() < 0; };
    for (double tau : taus) {
        DeltaSample d{tau, 0.0, r_star};
        if (negative(tau, r_star)) {
            double neg = r_star, pos = 0.0;
            bool crossed = false;
            for (int k = 1;; ++k) {
                const double r = r_star - k * step;
                if (r <= floor_r) break;
                if (!negative(tau, r)) {
                    pos = r;
                    crossed = true;
                    break;
                }
                neg = r;
            }
            if (crossed) {
                while (neg - pos > 1e-7 * r_star) {
                    const double mid = 0.5 * (neg + pos);
                    (negative(tau, mid) ? neg : pos) = mid;
                }
            } else {
                neg = floor_r;
            }
            d.delta = r_star - neg;
            d.value = neg;
        }
        out.push_back(d);
    }
    return out;
}

TrackingVerdict end_point_tracking_check(const TippingSetup& s, double r, double epsilon, double T, double c_stable,
                                         double c_unstable, double radius) {
    TrackingVerdict v;
    if (!(r < radius)) {
        v.reason = "r is not below the validity radius";
        return v;
    }
    const double sigma = s.orientation;
    const int n = s.order;
    const double rn = std::pow(r, n + 1);
    const double xu_plus = s.unstable->endpoint_plus();
    const double xs_minus = s.stable->endpoint_minus();
    const double xs_plus = s.stable->endpoint_plus();
    const auto& tau = s.grid->tau();

    // Nodes with t > T, plus the limit t -> infinity.
    v.first_inequality = sigma * (xs_plus - xu_plus) - c_stable * rn > epsilon;
    v.second_inequality = sigma * (xs_minus - s.unstable->endpoint_minus()) - c_unstable * rn > epsilon;
    for (double tk : tau) {
        if (tk / r > T) {
            const double S = s.series_s->partial_sum_slow(r, tk, n);
            v.first_inequality = v.first_inequality && sigma * (S - xu_plus) - c_stable * rn > epsilon;
        }
        if (-tk / r > T) {
            const double S = s.series_u->partial_sum_slow(r, tk, n);
            v.second_inequality = v.second_inequality && sigma * (xs_minus - S) - c_unstable * rn > epsilon;
        }
    }

    for (const auto& e : find_equilibria(*s.model.field, s.model.ramp.lambda_plus())) {
        if (e.stability != Stability::unstable || !(sigma * (e.x - xs_plus) > 0.0)) continue;
        bool ok = sigma * (e.x - xs_plus) - c_stable * rn > epsilon;
        for (double tk : tau)
            if (tk / r > T) ok = ok && sigma * (e.x - s.series_s->partial_sum_slow(r, tk, n)) - c_stable * rn > epsilon;
        v.other_unstable_ok = v.other_unstable_ok && ok;
    }

    v.certified = (v.first_inequality || v.second_inequality) && v.other_unstable_ok;
    if (!v.certified) {
        v.reason = !(v.first_inequality || v.second_inequality) ? "separation inequalities fail"
                                                               : "series may cross another unstable equilibrium";
    }
    return v;
}

ProximityVerdict late_proximity_check(const TippingSetup& s, double r, double epsilon, double T, double tol) {
    ProximityVerdict v;
    v.horizon = std::max(2.0 * T, T + 200.0 / r);
    double t_lo = -10.0 / r;
    if (t_lo >= T) t_lo = T - 1.0;
    PullbackOptions po;
    po.tol = tol;
    const auto pb = estimate_pullback_attractor(s.model, *s.stable, r, t_lo, v.horizon, po);
    const double target = s.stable->endpoint_plus();
    v.closest = INFINITY;
    for (const auto& smp : pb.trajectory.samples()) {
        if (smp.t <= T) continue;
        const double dist = std::abs(smp.x - target);
        v.closest = std::min(v.closest, dist);
        if (dist < epsilon && !v.found) {
            v.found = true;
            v.t_eps = smp.t;
        }
    }
    return v;
}

double stability_indicator(const TippingSetup& s, double r, double window, double tol) {
    PullbackOptions po;
    po.tol = tol;
    const auto pb = estimate_pullback_attractor(s.model, *s.stable, r, -window / r, window / r, po);
    double sup = -INFINITY;
    for (const auto& smp : pb.trajectory.samples())
        sup = std::max(sup, s.model.field->dfdx(smp.x, s.model.ramp.eval(r * smp.t)));
    return sup;
}

std::optional<double> indicator_crossing(const TippingSetup& s, double r_lo, double r_hi, double rel_tol,
                                         double window) {
    constexpr int kScan = 30;
    auto negative = [&](double r) { return stability_indicator(s, r, window) < 0.0; };
    if (!negative(r_lo)) return std::nullopt;
    double good = r_lo, bad = 0.0;
    for (int k = 1; k <= kScan; ++k) {
        const double r = r_lo * std::pow(r_hi / r_lo, static_cast<double>(k) / kScan);
        if (negative(r)) {
            good = r;
        } else {
            bad = r;
            break;
        }
    }
    if (bad == 0.0) return good;
    while (bad - good > rel_tol * good) {
        const double mid = 0.5 * (good + bad);
        (negative(mid) ? good : bad) = mid;
    }
    return good;
}

namespace {

nlohmann::ordered_json number(double v) {
    if (std::isfinite(v)) return v;
    return format_number(v);
}

nlohmann::ordered_json probe_json(const ProbeValue& p) {
    nlohmann::ordered_json j;
    j["value"] = number(p.value);
    j["escaped"] = p.escaped;
    j["escape_time"] = p.escape_time ? number(*p.escape_time) : nlohmann::ordered_json(nullptr);
    return j;
}

}  // namespace

std::string tipping_report_json(const TippingReport& rep) {
    using nlohmann::ordered_json;
    auto opt = [](const std::optional<double>& v) { return v ? number(*v) : ordered_json(nullptr); };
    ordered_json j;
    j["model"] = rep.model;
    j["n"] = rep.n;
    j["epsilon"] = rep.epsilon;
    j["tau"] = rep.tau;
    j["r_range"] = {rep.r_min, rep.r_max};
    j["bracket"] = rep.r_lo ? ordered_json{*rep.r_lo, *rep.r_hi} : ordered_json(nullptr);
    j["r_star"] = opt(rep.r_star);
    j["r_star_uncertainty"] = rep.r_star_uncertainty;
    j["classification"] = to_string(rep.classification);
    ordered_json br = ordered_json::array();
    for (const auto& [lo, hi] : rep.brackets) br.push_back({lo, hi});
    j["scan_brackets"] = br;
    j["escape_verdicts"] = rep.escape_verdicts;
    j["note"] = rep.note;
    ordered_json dc = ordered_json::array();
    for (const auto& d : rep.delta_curve) dc.push_back({d.tau, d.value});
    j["delta_curve"] = dc;
    ordered_json ic = ordered_json::array();
    for (const auto& d : rep.indicator_curve) ic.push_back({d.r, number(d.value)});
    j["indicator_curve"] = ic;
    j["indicator_crossing"] = opt(rep.indicator_crossing);
    j["tau_out_settled"] = opt(rep.tau_out_settled);
    j["tau_in_settled"] = opt(rep.tau_in_settled);
    ordered_json ev = ordered_json::array();
    for (const auto& d : rep.evidence) {
        ordered_json e;
        e["r"] = d.config.r;
        e["tau"] = d.config.tau;
        e["d_out"] = number(d.d_out.value);
        e["d_in"] = number(d.d_in.value);
        e["d_out_escape"] = d.d_out.escape_verdict;
        e["d_in_escape"] = d.d_in.escape_verdict;
        e["y_minus"] = probe_json(d.probes.y_minus);
        e["y_plus"] = probe_json(d.probes.y_plus);
        e["z_minus"] = probe_json(d.probes.z_minus);
        e["z_plus"] = probe_json(d.probes.z_plus);
        ev.push_back(e);
    }
    j["evidence"] = ev;
    return j.dump(2) + "\n";
}

std::string discriminant_csv(const std::vector<DiscriminantSample>& samples) {
    CsvWriter csv({"r", "tau", "d_out", "d_in", "flags"});
    for (const auto& d : samples) {
        std::string flags;
        auto add = [&](bool on, const char* name) {
            if (!on) return;
            if (!flags.empty()) flags += '|';
            flags += name;
        };
        add(d.probes.y_minus.escaped, "y_minus_escaped");
        add(d.probes.y_plus.escaped, "y_plus_escaped");
        add(d.probes.z_minus.escaped, "z_minus_escaped");
        add(d.probes.z_plus.escaped, "z_plus_escaped");
        if (flags.empty()) flags = "none";
        csv.row(std::vector<std::string>{format_number(d.config.r), format_number(d.config.tau),
                                         format_number(d.d_out.value), format_number(d.d_in.value), flags});
    }
    return csv.str();
}

}  // namespace rtip
