#include "rtip/cli.hpp"

#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rtip/asymptotics.hpp"
#include "rtip/equilibria.hpp"
#include "rtip/errors.hpp"
#include "rtip/integrate.hpp"
#include "rtip/io.hpp"
#include "rtip/model.hpp"
#include "rtip/ramp.hpp"
#include "rtip/tipping.hpp"

namespace rtip {
namespace {

using nlohmann::ordered_json;

struct RunConfig {
    std::string model = "quad_arctan";
    std::string model_file;
    std::optional<double> zeta;
    std::vector<std::string> params;
    std::string out_dir;
    double tol = 1e-10;
    std::uint64_t seed = 1;
    int order = 1;
    std::optional<double> epsilon;
    std::optional<double> tau;
    std::string r_range = "0.05:5";
    double r = 0.2;
    std::string window = "-20:20";
    std::size_t points = 801;
    double r_probe = 5.0;
    int figure = 0;
};

/// Named outputs of one subcommand, written atomically or streamed to stdout.
using Outputs = std::vector<std::pair<std::string, std::string>>;

std::pair<double, double> parse_range(const std::string& text, const char* what) {
    const auto colon = text.find(':', text.front() == '-' ? 1 : 0);
    if (colon == std::string::npos) throw ConfigError(std::string(what) + " must be written lo:hi, got '" + text + "'");
    try {
        std::size_t used = 0;
        const double lo = std::stod(text.substr(0, colon), &used);
        if (used != colon) throw std::invalid_argument(text);
        const std::string rest = text.substr(colon + 1);
        const double hi = std::stod(rest, &used);
        if (used != rest.size()) throw std::invalid_argument(text);
        if (!(lo < hi)) throw ConfigError(std::string(what) + " must satisfy lo < hi");
        return {lo, hi};
    } catch (const std::logic_error&) {
        throw ConfigError(std::string(what) + " must be written lo:hi, got '" + text + "'");
    }
}

ModelSpec build_model(const RunConfig& cfg) {
    if (!cfg.model_file.empty()) {
        if (cfg.zeta || !cfg.params.empty()) throw ConfigError("--zeta/--param do not apply to a model file");
        return load_model_file(cfg.model_file);
    }
    std::map<std::string, double> params;
    if (cfg.zeta) params["zeta"] = *cfg.zeta;
    for (const auto& p : cfg.params) {
        const auto eq = p.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("--param expects key=value, got '" + p + "'");
        try {
            params[p.substr(0, eq)] = std::stod(p.substr(eq + 1));
        } catch (const std::logic_error&) {
            throw ConfigError("--param value is not a number: '" + p + "'");
        }
    }
    return make_builtin_model(cfg.model, params);
}

bool is_quadratic_builtin(const ModelSpec& m) { return m.name.rfind("quad_", 0) == 0; }

void check_tol(double tol) {
    if (!(tol > 0.0) || tol > 1e-3) throw ConfigError("--tol must lie in (0, 1e-3]");
}

std::vector<double> uniform(double lo, double hi, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
}

void model_meta(CsvWriter& csv, const ModelSpec& m) {
    csv.meta("model", m.name);
    for (const auto& [k, v] : m.params) csv.meta(k, v);
}

// ---------------------------------------------------------------- branches

Outputs cmd_branches(const RunConfig& cfg) {
    const ModelSpec model = build_model(cfg);
    const TippingSetup s = make_tipping_setup(model, 0);
    CsvWriter csv({"tau", "lambda", "Xs", "Xu", "dxf_s", "dxf_u", "gap"});
    model_meta(csv, model);
    csv.meta("margin_s", s.stable->margin());
    csv.meta("margin_u", s.unstable->margin());
    csv.meta("d0", s.gap);
    const auto& tau = s.grid->tau();
    for (std::size_t k = 0; k < tau.size(); ++k) {
        const double xs = s.stable->values()[k], xu = s.unstable->values()[k];
        csv.row({tau[k], s.stable->lambda_values()[k], xs, xu, s.stable->dfdx_values()[k],
                 s.unstable->dfdx_values()[k], std::abs(xs - xu)});
    }
    return {{"branches.csv", csv.str()},
            {"branch_stable.csv", branch_csv(*s.stable)},
            {"branch_unstable.csv", branch_csv(*s.unstable)}};
}

// ---------------------------------------------------------------- series

Outputs cmd_series(const RunConfig& cfg) {
    check_tol(cfg.tol);
    if (cfg.order > kMaxSeriesOrder) {
        std::ostringstream os;
        os << "OrderTooHigh: --order " << cfg.order << " exceeds the supported maximum " << kMaxSeriesOrder;
        throw OrderTooHigh(os.str());
    }
    if (cfg.order < 0) throw ConfigError("--order must be non-negative");
    if (!(cfg.r_probe > 0.0)) throw ConfigError("--r-probe must be positive");
    const ModelSpec model = build_model(cfg);
    const TippingSetup s = make_tipping_setup(model, cfg.order);

    ErrorFitOptions fo;
    fo.pullback_tol = cfg.tol;
    ordered_json summary;
    summary["model"] = model.name;
    summary["params"] = model.params;
    summary["d0"] = s.gap;
    Outputs outs;
    for (const auto* series : {s.series_s.get(), s.series_u.get()}) {
        SeriesApproximation approx{*series, validity_radius(*series, cfg.r_probe), {}};
        approx.fit = estimate_error_constant(*series, model, fo);
        const std::string kind = to_string(series->kind());
        summary[kind] = ordered_json::parse(series_summary_json(approx));
        outs.emplace_back("series_" + kind + ".csv", coefficients_csv(*series));
    }
    outs.emplace_back("series.json", summary.dump(2) + "\n");
    return outs;
}

// ---------------------------------------------------------------- pullback

std::string pullback_panel(const TippingSetup& s, double r, double t_lo, double t_hi, std::size_t points,
                           double tol, int series_order, const std::vector<std::pair<std::string, std::function<double(double)>>>& extra) {
    PullbackOptions po;
    po.tol = tol;
    const auto a = estimate_pullback_attractor(s.model, *s.stable, r, t_lo, t_hi, po);
    const auto b = estimate_pullback_repeller(s.model, *s.unstable, r, t_lo, t_hi, po);
    std::vector<std::string> cols{"t", "Xs", "Xu", "x_minus", "x_plus"};
    for (int i = 1; i <= series_order; ++i) cols.push_back("S" + std::to_string(i) + "_s");
    for (int i = 1; i <= series_order; ++i) cols.push_back("S" + std::to_string(i) + "_u");
    for (const auto& [name, fn] : extra) cols.push_back(name);
    CsvWriter csv(cols);
    model_meta(csv, s.model);
    csv.meta("r", r);
    csv.meta("x_minus_status", to_string(a.trajectory.status()));
    csv.meta("x_plus_status", to_string(b.trajectory.status()));
    csv.meta("x_minus_anchors", static_cast<double>(a.anchor_times.size()));
    csv.meta("x_plus_anchors", static_cast<double>(b.anchor_times.size()));
    csv.meta("x_minus_convergence_gap", a.convergence_gap);
    csv.meta("x_plus_convergence_gap", b.convergence_gap);
    if (a.escaped()) csv.meta("x_minus_escape_time", *a.trajectory.escape_time());
    if (b.escaped()) csv.meta("x_plus_escape_time", *b.trajectory.escape_time());
    for (double t : uniform(t_lo, t_hi, points)) {
        std::vector<double> row{t, s.stable->value(r * t), s.unstable->value(r * t), a.value(t), b.value(t)};
        for (int i = 1; i <= series_order; ++i) row.push_back(s.series_s->partial_sum(r, t, i));
        for (int i = 1; i <= series_order; ++i) row.push_back(s.series_u->partial_sum(r, t, i));
        for (const auto& [name, fn] : extra) row.push_back(fn(t));
        csv.row(row);
    }
    return csv.str();
}

Outputs cmd_pullback(const RunConfig& cfg) {
    check_tol(cfg.tol);
    if (!(cfg.r > 0.0)) throw ConfigError("--r must be positive");
    if (cfg.points < 2) throw ConfigError("--points must be at least 2");
    const auto [lo, hi] = parse_range(cfg.window, "--window");
    if (cfg.order < 0 || cfg.order > kMaxSeriesOrder) {
        std::ostringstream os;
        os << "OrderTooHigh: --order must lie in [0, " << kMaxSeriesOrder << "]";
        throw OrderTooHigh(os.str());
    }
    const ModelSpec model = build_model(cfg);
    const TippingSetup s = make_tipping_setup(model, cfg.order);
    return {{"pullback.csv", pullback_panel(s, cfg.r, lo, hi, cfg.points, cfg.tol, cfg.order, {})}};
}

// ---------------------------------------------------------------- tip

std::vector<double> default_delta_taus() { return uniform(0.0, 30.0, 61); }

Outputs cmd_tip(const RunConfig& cfg) {
    check_tol(cfg.tol);
    if (cfg.order < 0 || cfg.order > kMaxSeriesOrder) {
        std::ostringstream os;
        os << "OrderTooHigh: --order must lie in [0, " << kMaxSeriesOrder << "]";
        throw OrderTooHigh(os.str());
    }
    const auto [r_lo, r_hi] = parse_range(cfg.r_range, "--r-range");
    if (!(r_lo > 0.0)) throw ConfigError("--r-range lower end must be positive");
    const ModelSpec model = build_model(cfg);
    const TippingSetup s = make_tipping_setup(model, cfg.order);

    DetectOptions o;
    const bool reference_model = cfg.model_file.empty() && is_quadratic_builtin(model);
    o.epsilon = cfg.epsilon ? *cfg.epsilon : (reference_model ? 0.2 : std::min(0.2 * s.gap, 0.2));
    o.tau = cfg.tau ? *cfg.tau : (reference_model ? 30.0 : 10.0 / r_lo);
    if (!(o.epsilon > 0.0) || !(o.epsilon < 0.5 * s.gap)) {
        std::ostringstream os;
        os << "--epsilon " << o.epsilon << " violates the requirement epsilon < d_0/2 (d_0 = " << s.gap << ")";
        throw ConfigError(os.str());
    }
    o.r_min = r_lo;
    o.r_max = r_hi;
    o.probe.tol = cfg.tol;
    o.delta_taus = uniform(0.0, o.tau, 31);
    o.settle_taus = o.delta_taus;
    o.indicator_samples = 12;
    const TippingReport rep = detect_tipping(s, o);
    return {{"tip.json", tipping_report_json(rep)}, {"discriminants.csv", discriminant_csv(rep.evidence)}};
}

// ---------------------------------------------------------------- figure

constexpr double kFigEpsilon = 0.2;
constexpr double kFigTau = 30.0;
constexpr std::size_t kFigPoints = 1201;

ModelSpec quad_arctan(double zeta) { return make_builtin_model("quad_arctan", {{"zeta", zeta}}); }

std::string tag(double r) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", r);
    return buf;
}

// Probe panels share the rates: two below and two above the tipping rate of
// the zeta = 0.1 model (r* ~ 0.2804).
const std::vector<double> kProbeRates{0.2, 0.28, 0.281, 0.35};

std::function<double(double)> probe_curve(const TippingSetup& s, double r, double t0, double x0, double t1, double tol) {
    IntegratorOptions io;
    io.tol = tol;
    auto tr = std::make_shared<Trajectory>(solve_ivp(s.model, r, t0, x0, t1, io));
    return [tr](double t) { return tr->value_or_escape(t); };
}

Outputs figure_probes(const RunConfig& cfg, bool inner) {
    const TippingSetup s = make_tipping_setup(quad_arctan(0.1), 1);
    const double sigma = s.orientation;
    Outputs outs;
    for (double r : kProbeRates) {
        const double ss = s.series_s->partial_sum(r, -kFigTau, 1);
        const double su = s.series_u->partial_sum(r, kFigTau, 1);
        const double off = inner ? -sigma * kFigEpsilon : sigma * kFigEpsilon;
        auto minus = probe_curve(s, r, -kFigTau, ss + off, kFigTau, cfg.tol);
        auto plus = probe_curve(s, r, kFigTau, su - off, -kFigTau, cfg.tol);
        const std::string p = inner ? "z" : "y";
        std::string body = pullback_panel(s, r, -kFigTau, kFigTau, kFigPoints, cfg.tol, 1,
                                          {{p + "_minus", minus}, {p + "_plus", plus}});
        const std::string head = "# figure: " + std::string(inner ? "3" : "4") + "\n# epsilon: 0.2\n# tau: 30\n";
        outs.emplace_back(std::string("figure") + (inner ? "3" : "4") + "_r" + tag(r) + ".csv", head + body);
    }
    return outs;
}

Outputs cmd_figure(const RunConfig& cfg) {
    check_tol(cfg.tol);
    switch (cfg.figure) {
        case 1: {
            const TippingSetup s = make_tipping_setup(quad_arctan(0.1), 0);
            Outputs outs;
            for (double r : {0.2, 0.35})
                outs.emplace_back("figure1_r" + tag(r) + ".csv",
                                  "# figure: 1\n" + pullback_panel(s, r, -30.0, 30.0, kFigPoints, cfg.tol, 0, {}));
            return outs;
        }
        case 2: {
            const TippingSetup s = make_tipping_setup(quad_arctan(1.1), 3);
            Outputs outs;
            for (double r : {0.5, 2.0})
                outs.emplace_back("figure2_r" + tag(r) + ".csv",
                                  "# figure: 2\n" + pullback_panel(s, r, -8.0, 8.0, 801, cfg.tol, 3, {}));
            return outs;
        }
        case 3: return figure_probes(cfg, true);
        case 4: return figure_probes(cfg, false);
        case 5: {
            const TippingSetup s = make_tipping_setup(quad_arctan(0.1), 1);
            DetectOptions o;
            o.epsilon = kFigEpsilon;
            o.tau = kFigTau;
            o.r_min = 0.05;
            o.r_max = 5.0;
            o.rel_width = 1e-6;
            o.probe.tol = cfg.tol;
            const TippingReport rep = detect_tipping(s, o);
            if (!rep.r_star) throw NoConvergence("figure 5: no tipping bracket found");
            const auto curve = delta_curve(s, kFigEpsilon, *rep.r_star, default_delta_taus(), o.probe);
            CsvWriter csv({"tau", "delta", "r_star_minus_delta"});
            csv.meta("figure", "5");
            model_meta(csv, s.model);
            csv.meta("n", "1");
            csv.meta("epsilon", kFigEpsilon);
            csv.meta("r_star", *rep.r_star);
            csv.meta("bracket_lo", *rep.r_lo);
            csv.meta("bracket_hi", *rep.r_hi);
            for (const auto& d : curve) csv.row({d.tau, d.delta, d.value});
            return {{"figure5.csv", csv.str()}};
        }
        default: {
            std::ostringstream os;
            os << "unknown figure " << cfg.figure << " (expected 1..5)";
            throw ConfigError(os.str());
        }
    }
}

// ---------------------------------------------------------------- validate

const char* violation_name(RampViolation::Kind k) {
    switch (k) {
        case RampViolation::Kind::monotonicity: return "monotonicity";
        case RampViolation::Kind::range: return "range";
        case RampViolation::Kind::tail_decay: return "tail_decay";
    }
    return "unknown";
}

Outputs cmd_validate(const RunConfig& cfg, bool& passed) {
    const ModelSpec model = build_model(cfg);
    ordered_json j;
    j["model"] = model.name;
    j["params"] = model.params;
    passed = true;

    ordered_json ramp;
    ramp["kind"] = to_string(model.ramp.kind());
    ramp["lambda_minus"] = model.ramp.lambda_minus();
    ramp["lambda_plus"] = model.ramp.lambda_plus();
    ramp["tau_tail"] = model.ramp.tau_tail();
    ordered_json viol = ordered_json::array();
    if (model.ramp.kind() != RampKind::constant) {
        const auto grid = default_ramp_grid(model.ramp, 0.1);
        for (const auto& v : validate_ramp(model.ramp, grid))
            viol.push_back({{"kind", violation_name(v.kind)}, {"tau", v.tau}, {"detail", v.detail}});
    }
    passed = passed && viol.empty();
    ramp["violations"] = viol;
    j["ramp"] = ramp;

    const auto jets = check_jet_consistency(model, 100, cfg.seed);
    const bool jets_ok = jets.max_rel_error_first < 1e-5 && jets.max_rel_error_second < 1e-5;
    passed = passed && jets_ok;
    j["jet_consistency"] = {{"samples", jets.samples},
                            {"seed", cfg.seed},
                            {"max_rel_error_first", jets.max_rel_error_first},
                            {"max_rel_error_second", jets.max_rel_error_second},
                            {"pass", jets_ok}};

    const TippingSetup s = make_tipping_setup(model, 0);
    double residual = 0.0;
    for (const auto* b : {s.stable.get(), s.unstable.get()})
        for (std::size_t k = 0; k < b->values().size(); ++k)
            residual = std::max(residual, std::abs(model.field->eval(b->values()[k], b->lambda_values()[k])));
    const bool branches_ok = residual < 1e-9;
    passed = passed && branches_ok;
    j["branches"] = {{"margin_s", s.stable->margin()},
                     {"margin_u", s.unstable->margin()},
                     {"d0", s.gap},
                     {"Xs_minus", s.stable->endpoint_minus()},
                     {"Xs_plus", s.stable->endpoint_plus()},
                     {"Xu_minus", s.unstable->endpoint_minus()},
                     {"Xu_plus", s.unstable->endpoint_plus()},
                     {"max_residual", residual},
                     {"pass", branches_ok}};
    j["pass"] = passed;
    return {{"validate.json", j.dump(2) + "\n"}};
}

void emit(const Outputs& outs, const RunConfig& cfg, std::ostream& out) {
    if (cfg.out_dir.empty()) {
        for (const auto& [name, body] : outs) {
            if (outs.size() > 1) out << "# file: " << name << "\n";
            out << body;
        }
        return;
    }
    for (const auto& [name, body] : outs) {
        const std::string path = (std::filesystem::path(cfg.out_dir) / name).string();
        write_file_atomic(path, body);
        out << "wrote " << path << "\n";
    }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    CLI::App app{"Rate-induced tipping analysis for scalar ODEs x' = f(x, Lambda(r t))", "rtip"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Flat key=value file; command-line flags take precedence");

    auto* o_model = app.add_option("--model", cfg.model, "Built-in model: quad_arctan, quad_tanh, quad_frozen");
    app.add_option("--model-file", cfg.model_file, "Polynomial model file")->excludes(o_model);
    app.add_option("--zeta", cfg.zeta, "Parameter zeta of the quadratic models");
    app.add_option("--param", cfg.params, "Extra model parameter key=value (repeatable)");
    app.add_option("--out", cfg.out_dir, "Output directory; stdout when omitted");
    app.add_option("--tol", cfg.tol, "Integrator and pullback tolerance")->capture_default_str();
    app.add_option("--seed", cfg.seed, "Seed for randomized checks")->capture_default_str();
    app.add_option("--order", cfg.order, "Series order n (0..5)")->capture_default_str();
    app.add_option("--epsilon", cfg.epsilon, "Probe offset epsilon (< d_0/2)");
    app.add_option("--tau", cfg.tau, "Probe horizon tau");
    app.add_option("--r-range", cfg.r_range, "Rate range lo:hi for tip")->capture_default_str();
    app.add_option("--r", cfg.r, "Rate for pullback")->capture_default_str();
    app.add_option("--window", cfg.window, "Time window lo:hi for pullback")->capture_default_str();
    app.add_option("--points", cfg.points, "Output samples for pullback")->capture_default_str();
    app.add_option("--r-probe", cfg.r_probe, "Upper probe rate for the validity radius")->capture_default_str();

    auto* c_branches = app.add_subcommand("branches", "Quasi-static equilibrium branches");
    auto* c_series = app.add_subcommand("series", "Asymptotic series coefficients and error fit");
    auto* c_pullback = app.add_subcommand("pullback", "Pullback attracting and repelling solutions");
    auto* c_tip = app.add_subcommand("tip", "Detect and localize rate-induced tipping");
    auto* c_figure = app.add_subcommand("figure", "Data behind figures 1..5");
    c_figure->add_option("which", cfg.figure, "Figure number 1..5")->required();
    auto* c_validate = app.add_subcommand("validate", "Check model assumptions");
    for (auto* c : {c_branches, c_series, c_pullback, c_tip, c_figure, c_validate}) c->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        Outputs outs;
        bool passed = true;
        if (c_branches->parsed()) outs = cmd_branches(cfg);
        else if (c_series->parsed()) outs = cmd_series(cfg);
        else if (c_pullback->parsed()) outs = cmd_pullback(cfg);
        else if (c_tip->parsed()) outs = cmd_tip(cfg);
        else if (c_figure->parsed()) outs = cmd_figure(cfg);
        else if (c_validate->parsed()) outs = cmd_validate(cfg, passed);
        emit(outs, cfg, out);
        if (!passed) {
            err << "error: model validation failed\n";
            return static_cast<int>(ErrorFamily::precondition);
        }
        return 0;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace rtip
