#pragma once

#include <memory>
#include <string>
#include <vector>

#include "rtip/field.hpp"
#include "rtip/ramp.hpp"
#include "rtip/spline.hpp"

namespace rtip {

enum class Stability { stable, unstable };

std::string to_string(Stability s);

struct Equilibrium {
    double x = 0.0;
    double lambda = 0.0;
    Stability stability = Stability::stable;
    double derivative = 0.0;  // df/dx at (x, lambda)
};

struct RootOptions {
    std::size_t cells = 2048;
    double root_tolerance = 1e-10;
    double hyperbolicity_tolerance = 1e-6;
};

/// All roots of f(., lambda) in the trusted x-range, ascending.
///
/// The scan uses cells uniform in asinh(x), splits every cell at interior
/// extrema of f and brackets sign changes on the monotone pieces, so pairs of
/// nearby roots inside one cell are still separated.
/// Throws NoRoots or NonHyperbolicRoot.
std::vector<Equilibrium> find_equilibria(const ScalarField& field, double lambda, const RootOptions& opts = {});

/// Newton iteration on x -> f(x, lambda) started at guess; returns the polished root.
double polish_root(const ScalarField& field, double guess, double lambda);

/// Curve tau -> X(tau) of hyperbolic equilibria of the frozen systems along a ramp.
class QuasiStaticBranch {
public:
    QuasiStaticBranch(std::shared_ptr<const ScalarField> field, Ramp ramp, std::shared_ptr<const SlowGrid> grid,
                      Stability kind, std::vector<double> values);

    Stability kind() const noexcept { return kind_; }
    const SlowGrid& grid() const noexcept { return *grid_; }
    std::shared_ptr<const SlowGrid> grid_ptr() const noexcept { return grid_; }
    const std::vector<double>& values() const noexcept { return values_; }
    const std::vector<double>& lambda_values() const noexcept { return lambda_values_; }
    const std::vector<double>& dfdx_values() const noexcept { return dfdx_values_; }
    const ScalarField& field() const noexcept { return *field_; }
    const Ramp& ramp() const noexcept { return ramp_; }

    /// min_k |df/dx| along the branch.
    double margin() const noexcept { return margin_; }
    /// Equilibria of the limit problems at lambda_minus and lambda_plus.
    double endpoint_minus() const noexcept { return endpoint_minus_; }
    double endpoint_plus() const noexcept { return endpoint_plus_; }

    /// X(tau) at any tau: spline guess polished by Newton on f(., Lambda(tau)).
    double value(double tau) const;
    /// Cubic-spline interpolant of the node values and its tau-derivative.
    double spline_value(double tau) const { return spline_.value(tau); }
    double spline_derivative(double tau) const { return spline_.derivative(tau); }

private:
    std::shared_ptr<const ScalarField> field_;
    Ramp ramp_;
    std::shared_ptr<const SlowGrid> grid_;
    Stability kind_;
    std::vector<double> values_, lambda_values_, dfdx_values_;
    double margin_ = 0.0;
    double endpoint_minus_ = 0.0, endpoint_plus_ = 0.0;
    GridSpline spline_;
};

struct TraceOptions {
    double hyperbolicity_tolerance = 1e-6;
    int max_substep_depth = 12;
};

/// Predictor-corrector continuation of a hyperbolic seed over the grid.
/// The seed may sit at either end of the ramp (lambda_minus or lambda_plus).
/// Throws BranchFold when the branch loses hyperbolicity.
QuasiStaticBranch trace_branch(std::shared_ptr<const ScalarField> field, const Ramp& ramp, const Equilibrium& seed,
                               std::shared_ptr<const SlowGrid> grid, const TraceOptions& opts = {});

/// X'(tau) by implicit differentiation of f(X(tau), Lambda(tau)) = 0.
double branch_derivative(const QuasiStaticBranch& branch, double tau);

/// min_k |X_a(tau_k) - X_b(tau_k)| over a shared grid; throws GapCollapse below gap_tolerance.
double min_branch_gap(const QuasiStaticBranch& a, const QuasiStaticBranch& b, double gap_tolerance = 1e-6);

/// Columns tau, lambda, x, dxf.
std::string branch_csv(const QuasiStaticBranch& branch);

}  // namespace rtip
