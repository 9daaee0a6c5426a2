#pragma once

#include <cstddef>
#include <vector>

namespace rtip {

/// Natural cubic spline through (x_k, y_k) with first-derivative evaluation.
/// Nodes must be strictly increasing; uniformly spaced nodes get O(1) lookup.
class CubicSpline {
public:
    CubicSpline() = default;
    CubicSpline(std::vector<double> x, std::vector<double> y);

    /// Values outside the node range are clamped to the end values.
    double value(double x) const;
    /// Derivative; zero outside the node range.
    double derivative(double x) const;

    const std::vector<double>& nodes() const noexcept { return x_; }
    const std::vector<double>& values() const noexcept { return y_; }
    bool empty() const noexcept { return x_.empty(); }

private:
    std::size_t interval(double x) const;

    std::vector<double> x_, y_, m_;  // m_: second derivatives at nodes
    bool uniform_ = false;
};

/// Slow-time grid tau_k = scale * sinh(u_k) with u_k uniform.
///
/// The stretching keeps nodes dense where ramps vary and sparse in their
/// algebraic tails, so one grid covers [-tau_tail, tau_tail] even when tau_tail
/// is in the thousands.
class SlowGrid {
public:
    SlowGrid(double tau_tail, std::size_t points, double scale = 1.0);

    const std::vector<double>& tau() const noexcept { return tau_; }
    const std::vector<double>& u() const noexcept { return u_; }
    std::size_t size() const noexcept { return tau_.size(); }
    double tau_min() const noexcept { return tau_.front(); }
    double tau_max() const noexcept { return tau_.back(); }
    double scale() const noexcept { return scale_; }

    double to_u(double tau) const;
    double dtau_du(double u) const;

private:
    double scale_;
    std::vector<double> u_, tau_;
};

/// Function sampled on a SlowGrid, interpolated by a cubic spline in u.
class GridSpline {
public:
    GridSpline() = default;
    GridSpline(const SlowGrid& grid, std::vector<double> values);

    /// Clamped to the end values beyond the grid.
    double value(double tau) const;
    /// d/dtau; zero beyond the grid.
    double derivative(double tau) const;

    const std::vector<double>& values() const noexcept { return spline_.values(); }

private:
    double scale_ = 1.0;
    double tau_min_ = 0.0, tau_max_ = 0.0;
    CubicSpline spline_;
};

}  // namespace rtip
