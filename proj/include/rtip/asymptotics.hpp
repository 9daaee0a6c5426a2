#pragma once

#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "rtip/equilibria.hpp"
#include "rtip/integrate.hpp"
#include "rtip/model.hpp"
#include "rtip/spline.hpp"

namespace rtip {

/// Highest supported series order.
inline constexpr int kMaxSeriesOrder = 5;

/// Coefficients a_0..a_n of the slow-time expansion x(t) ~ sum_i a_i(r t) r^i
/// along one quasi-static branch.
///
/// a_0 and a_1 are evaluated exactly at any tau (Newton-polished branch value and
/// Xdot / f_x); higher coefficients are spline interpolants of their grid values.
/// Beyond the grid, a_0 keeps following the branch and a_i (i >= 2) vanish.
class SeriesCoefficients {
public:
    SeriesCoefficients(std::shared_ptr<const QuasiStaticBranch> branch, std::vector<std::vector<double>> values);

    Stability kind() const noexcept { return branch_->kind(); }
    int order() const noexcept { return static_cast<int>(values_.size()) - 1; }
    const QuasiStaticBranch& branch() const noexcept { return *branch_; }
    std::shared_ptr<const QuasiStaticBranch> branch_ptr() const noexcept { return branch_; }
    const SlowGrid& grid() const noexcept { return branch_->grid(); }

    /// values()[i][k] = a_i(tau_k).
    const std::vector<std::vector<double>>& values() const noexcept { return values_; }
    /// M_i = max_k |a_i(tau_k)|.
    const std::vector<double>& sup_norms() const noexcept { return sup_norms_; }

    double coefficient(int i, double tau) const;
    /// d a_i / d tau from the coefficient's spline.
    double coefficient_derivative(int i, double tau) const;

    /// S_m(r, t) = sum_{i <= m} a_i(r t) r^i for m <= order().
    double partial_sum(double r, double t, int m) const;
    double partial_sum(double r, double t) const { return partial_sum(r, t, order()); }
    /// Same sum at slow time tau = r t.
    double partial_sum_slow(double r, double tau, int m) const;

private:
    std::shared_ptr<const QuasiStaticBranch> branch_;
    std::vector<std::vector<double>> values_;
    std::vector<GridSpline> splines_;
    std::vector<double> sup_norms_;
};

/// Builds a_0..a_n by the order-by-order recursion
///   a_i = ( a_{i-1}' - sum_{j=2}^{i} f_j sum_{k_1+...+k_j=i} a_{k_1}...a_{k_j} ) / f_1,
/// with f_j the x-Taylor coefficients of f at (X(tau), Lambda(tau)).
/// Throws OrderTooHigh for n > kMaxSeriesOrder and MarginLoss when |f_1| collapses.
SeriesCoefficients compute_coefficients(std::shared_ptr<const QuasiStaticBranch> branch, int n,
                                        double hyperbolicity_tolerance = 1e-6);

/// All compositions of total into exactly parts positive integers.
std::vector<std::vector<int>> compositions(int total, int parts);

/// Largest r <= r_probe_max for which f_x(S_n(r, .), Lambda) keeps the branch's
/// sign at every grid node; bisection to relative tolerance rel_tol.
double validity_radius(const SeriesCoefficients& series, double r_probe_max, double rel_tol = 1e-3);

struct ErrorFitOptions {
    std::vector<double> r_samples;  // empty: 10 geometric points in [1e-3, 1e-1]
    double window = 10.0;           // t in [-window / r, window / r]
    double pullback_tol = 1e-10;
};

struct ErrorFit {
    std::vector<double> r;
    std::vector<double> error;  // E(r) = max_t |S_n(r, t) - x^r(t)|
    double slope = 0.0;
    double intercept = 0.0;     // log C of the least-squares line
    double residual = 0.0;      // RMS residual of the log-log fit
    double constant = 0.0;      // C_n = max_r E(r) / r^{n+1}
};

/// E(r) against pullback estimates of x^r_- (stable) or x^r_+ (unstable).
ErrorFit estimate_error_constant(const SeriesCoefficients& series, const ModelSpec& model,
                                 const ErrorFitOptions& opts = {});

/// Least-squares line through (log x, log y); points with y <= 0 are skipped.
void fit_loglog(const std::vector<double>& x, const std::vector<double>& y, double& slope, double& intercept,
                double& residual);

struct SeriesApproximation {
    SeriesCoefficients coefficients;
    double validity_radius = 0.0;
    ErrorFit fit;
};

/// Stable side: largest beta with |S_n(r,t) - x^r_-(t)| < eps for all sampled t <= beta.
/// Unstable side: smallest alpha with |S_n(r,t) - x^r_+(t)| < eps for all sampled t >= alpha.
/// Returns +-infinity when the bound holds on the whole window and
/// r < min(radius, (eps / error_constant)^(1/(n+1))).
double validity_boundary(const SeriesCoefficients& series, const PullbackSolution& pullback, double r, int n,
                         double eps, double radius, double error_constant);

/// Columns tau, a_0, ..., a_n.
std::string coefficients_csv(const SeriesCoefficients& series);

/// JSON object with order, kind, sup_norms, validity_radius, error_constant, slope, fit data.
std::string series_summary_json(const SeriesApproximation& approx);

}  // namespace rtip
