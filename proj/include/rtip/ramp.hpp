#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace rtip {

enum class RampKind { arctan, tanh, logistic, constant };

std::string to_string(RampKind kind);
RampKind ramp_kind_from_string(const std::string& name);

/// Strictly increasing, asymptotically constant parameter ramp tau -> lambda.
///
/// All catalogue shapes are affine images of a normalized sigmoid with
/// limits -1 and +1, so Lambda(tau) = lambda_minus + (lambda_plus - lambda_minus) * (g(tau) + 1) / 2.
/// The constant kind freezes the parameter at lambda_minus == lambda_plus and
/// exists for autonomous reference runs; it is flagged by validate_ramp.
///
/// tau_tail is the smallest tau >= 0 with Lambda'(+-tau) <= tail_tolerance; beyond
/// it the ramp is treated as constant by grid-based computations.
class Ramp {
public:
    Ramp(RampKind kind, double lambda_minus, double lambda_plus, double tail_tolerance = 1e-8);

    static Ramp constant(double lambda);

    RampKind kind() const noexcept { return kind_; }
    double lambda_minus() const noexcept { return lambda_minus_; }
    double lambda_plus() const noexcept { return lambda_plus_; }
    double tail_tolerance() const noexcept { return tail_tolerance_; }
    double tau_tail() const noexcept { return tau_tail_; }

    double eval(double tau) const noexcept;
    double deriv(double tau) const noexcept;

private:
    double shape(double tau) const noexcept;
    double shape_deriv(double tau) const noexcept;

    RampKind kind_;
    double lambda_minus_;
    double lambda_plus_;
    double tail_tolerance_;
    double tau_tail_ = 0.0;
};

struct RampViolation {
    enum class Kind { monotonicity, range, tail_decay };
    Kind kind;
    double tau;
    std::string detail;
};

/// Sampling view of an arbitrary candidate ramp, so shapes outside the
/// catalogue can be checked before a model is built from them.
struct RampProbe {
    std::function<double(double)> eval;
    std::function<double(double)> deriv;
    double lambda_minus;
    double lambda_plus;
    double tail_tolerance;
    double tau_tail;
};

RampProbe probe_of(const Ramp& ramp);

/// Empty result means every sampled ramp invariant holds on the grid.
std::vector<RampViolation> validate_ramp(const RampProbe& ramp, std::span<const double> grid);
std::vector<RampViolation> validate_ramp(const Ramp& ramp, std::span<const double> grid);

/// Uniform grid over [-tau_tail, tau_tail] with the given spacing.
std::vector<double> default_ramp_grid(const Ramp& ramp, double step);

}  // namespace rtip
