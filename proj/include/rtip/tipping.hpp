#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rtip/asymptotics.hpp"
#include "rtip/equilibria.hpp"
#include "rtip/integrate.hpp"
#include "rtip/model.hpp"

namespace rtip {

/// Everything the discriminants need for one model and series order: the traced
/// stable branch from lambda_minus, the unstable branch through X^u_+, both
/// series, the measured gap d_0 and the orientation sign(X^s - X^u).
struct TippingSetup {
    ModelSpec model;
    int order = 1;
    std::shared_ptr<const SlowGrid> grid;
    std::shared_ptr<const QuasiStaticBranch> stable;
    std::shared_ptr<const QuasiStaticBranch> unstable;
    std::shared_ptr<const SeriesCoefficients> series_s;
    std::shared_ptr<const SeriesCoefficients> series_u;
    double gap = 0.0;
    double orientation = 1.0;
};

struct SetupOptions {
    std::size_t grid_points = 4001;
    double grid_scale = 1.0;
};

/// Picks the first stable equilibrium at lambda_minus and the unstable
/// equilibrium at lambda_plus nearest to the stable branch's end point.
TippingSetup make_tipping_setup(const ModelSpec& model, int order, const SetupOptions& opts = {});

struct ProbeConfig {
    int n = 1;
    double epsilon = 0.2;
    double tau = 30.0;
    double r = 0.1;
};

/// Probe state at t = 0; escaped probes carry +-infinity and the escape time.
struct ProbeValue {
    double value = 0.0;
    bool escaped = false;
    std::optional<double> escape_time;
};

struct ProbeStates {
    ProbeValue y_minus, y_plus, z_minus, z_plus;
};

/// Discriminant value; escape_verdict marks a sign decided by a blow-up.
struct DiscriminantValue {
    double value = 0.0;
    bool escape_verdict = false;
    int sign() const noexcept { return value > 0 ? 1 : (value < 0 ? -1 : 0); }
};

struct DiscriminantSample {
    ProbeConfig config;
    DiscriminantValue d_out, d_in;
    ProbeStates probes;
};

struct ProbeOptions {
    double tol = 1e-10;
};

/// y_- and z_- forward on [-tau, 0] from S^s(r,-tau) +- eps; y_+ and z_+ backward
/// on [0, tau] from S^u(r,tau) -+ eps. Offsets point away from (y) or into (z)
/// the gap between the series approximations.
ProbeStates probe_solutions(const TippingSetup& setup, const ProbeConfig& config, const ProbeOptions& opts = {});

/// D_out = y_-(0,-tau) - y_+(0,tau) and D_in = z_-(0,-tau) - z_+(0,tau), both
/// multiplied by the orientation so positive means "attractor side above".
DiscriminantSample discriminants(const TippingSetup& setup, const ProbeConfig& config, const ProbeOptions& opts = {});
DiscriminantValue d_out(const TippingSetup& setup, const ProbeConfig& config, const ProbeOptions& opts = {});
DiscriminantValue d_in(const TippingSetup& setup, const ProbeConfig& config, const ProbeOptions& opts = {});

/// orientation * (x^r_-(0) - x^r_+(0)) from pullback estimates; infinite after an escape.
double oracle_gap_at_zero(const TippingSetup& setup, double r, double tol = 1e-10);

enum class Classification { end_point_tracking, tipping, visible_tipping, undetermined };

std::string to_string(Classification c);

struct DeltaSample {
    double tau = 0.0;
    double delta = 0.0;
    double value = 0.0;  // r_star - delta
};

struct IndicatorSample {
    double r = 0.0;
    double value = 0.0;
};

struct TippingReport {
    std::string model;
    int n = 1;
    double epsilon = 0.0;
    double tau = 0.0;
    double r_min = 0.0, r_max = 0.0;
    Classification classification = Classification::undetermined;
    std::optional<double> r_lo, r_hi, r_star;
    double r_star_uncertainty = 0.0;
    /// All coarse-scan brackets with a D_out sign change.
    std::vector<std::pair<double, double>> brackets;
    bool escape_verdicts = false;
    std::string note;
    std::vector<DiscriminantSample> evidence;
    std::vector<DeltaSample> delta_curve;
    std::vector<IndicatorSample> indicator_curve;
    std::optional<double> indicator_crossing;
    /// Empirical smallest tau on DetectOptions::settle_taus from which the signs
    /// stop changing: d_out > 0 at r_lo and < 0 at r_hi (tau_out), d_in > 0 at r_lo (tau_in).
    std::optional<double> tau_out_settled, tau_in_settled;
};

struct DetectOptions {
    double epsilon = 0.2;
    double tau = 30.0;
    double r_min = 0.05;
    double r_max = 5.0;
    std::size_t scan_points = 40;
    double rel_width = 1e-3;
    ProbeOptions probe;
    bool oracle_check = true;
    double oracle_margin = 5e-3;  // relative offset of the oracle probes outside the bracket
    std::vector<double> delta_taus;       // empty: no delta curve
    std::size_t indicator_samples = 0;    // 0: no indicator curve
    std::vector<double> settle_taus;      // empty: no sign-settling scan
};

/// Scan-and-bisect on the sign of D_out. Throws ConfigError when epsilon >= d_0/2
/// and PreconditionError when D_out or D_in is not positive at r_min.
TippingReport detect_tipping(const TippingSetup& setup, const DetectOptions& opts);

/// (tau, r_star - delta(n, tau)); delta is 0 where D_in(tau, r_star) >= 0.
std::vector<DeltaSample> delta_curve(const TippingSetup& setup, double epsilon, double r_star,
                                     const std::vector<double>& taus, const ProbeOptions& opts = {});

struct TrackingVerdict {
    bool certified = false;
    bool first_inequality = false;   // X^u_+ + eps < S^s - C r^{n+1} for t > T
    bool second_inequality = false;  // S^u(r,-t) + C r^{n+1} < X^s_- - eps for t > T
    bool other_unstable_ok = true;
    bool empirical_constant = true;
    std::string reason;
};

/// Sufficient end-point-tracking test with fitted constants in place of C_n.
TrackingVerdict end_point_tracking_check(const TippingSetup& setup, double r, double epsilon, double T,
                                         double c_stable, double c_unstable, double radius);

struct ProximityVerdict {
    bool found = false;
    std::optional<double> t_eps;
    double horizon = 0.0;
    double closest = 0.0;
};

/// Looks for t > T with |x^r_-(t) - X^s_+| < eps on a horizon max(2T, T + 200/r).
ProximityVerdict late_proximity_check(const TippingSetup& setup, double r, double epsilon, double T,
                                      double tol = 1e-10);

/// sup_t f_x(x^r_-(t), Lambda(r t)) over t in [-window/r, window/r] (slow-time window).
double stability_indicator(const TippingSetup& setup, double r, double window = 20.0, double tol = 1e-10);

/// Largest r in [r_lo, r_hi] with a negative indicator, by scan and bisection.
std::optional<double> indicator_crossing(const TippingSetup& setup, double r_lo, double r_hi,
                                         double rel_tol = 1e-4, double window = 20.0);

std::string tipping_report_json(const TippingReport& report);

/// Columns r, tau, d_out, d_in, flags.
std::string discriminant_csv(const std::vector<DiscriminantSample>& samples);

}  // namespace rtip
