#include "rtip/spline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rtip {

CubicSpline::CubicSpline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw std::invalid_argument("spline needs at least two matching nodes");
    for (std::size_t k = 1; k < n; ++k)
        if (!(x_[k] > x_[k - 1])) throw std::invalid_argument("spline nodes must be strictly increasing");

    const double h0 = x_[1] - x_[0];
    uniform_ = true;
    for (std::size_t k = 1; k < n && uniform_; ++k)
        uniform_ = std::abs((x_[k] - x_[k - 1]) - h0) <= 1e-10 * h0;

    // Thomas algorithm for the natural-spline moment system.
    m_.assign(n, 0.0);
    if (n == 2) return;
    std::vector<double> c(n, 0.0), d(n, 0.0);
    for (std::size_t k = 1; k + 1 < n; ++k) {
        const double hl = x_[k] - x_[k - 1], hr = x_[k + 1] - x_[k];
        const double a = hl / 6.0, b = (hl + hr) / 3.0, cc = hr / 6.0;
        const double rhs = (y_[k + 1] - y_[k]) / hr - (y_[k] - y_[k - 1]) / hl;
        const double denom = b - a * c[k - 1];
        c[k] = cc / denom;
        d[k] = (rhs - a * d[k - 1]) / denom;
    }
    for (std::size_t k = n - 2; k >= 1; --k) {
        m_[k] = d[k] - c[k] * m_[k + 1];
        if (k == 1) break;
    }
}

std::size_t CubicSpline::interval(double x) const {
    const std::size_t n = x_.size();
    if (uniform_) {
        const double h = (x_.back() - x_.front()) / static_cast<double>(n - 1);
        const auto k = static_cast<std::ptrdiff_t>(std::floor((x - x_.front()) / h));
        return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(k, 0, static_cast<std::ptrdiff_t>(n) - 2));
    }
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    const auto k = static_cast<std::ptrdiff_t>(it - x_.begin()) - 1;
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(k, 0, static_cast<std::ptrdiff_t>(n) - 2));
}

double CubicSpline::value(double x) const {
    if (x <= x_.front()) return y_.front();
    if (x >= x_.back()) return y_.back();
    const std::size_t k = interval(x);
    const double h = x_[k + 1] - x_[k];
    const double a = (x_[k + 1] - x) / h, b = (x - x_[k]) / h;
    return a * y_[k] + b * y_[k + 1] + ((a * a * a - a) * m_[k] + (b * b * b - b) * m_[k + 1]) * h * h / 6.0;
}

double CubicSpline::derivative(double x) const {
    if (x < x_.front() || x > x_.back()) return 0.0;
    const std::size_t k = interval(x);
    const double h = x_[k + 1] - x_[k];
    const double a = (x_[k + 1] - x) / h, b = (x - x_[k]) / h;
    return (y_[k + 1] - y_[k]) / h + ((1.0 - 3.0 * a * a) * m_[k] + (3.0 * b * b - 1.0) * m_[k + 1]) * h / 6.0;
}

SlowGrid::SlowGrid(double tau_tail, std::size_t points, double scale) : scale_(scale) {
    if (!(tau_tail > 0.0) || points < 3 || !(scale > 0.0)) throw std::invalid_argument("invalid slow-time grid");
    const double umax = std::asinh(tau_tail / scale);
    u_.resize(points);
    tau_.resize(points);
    for (std::size_t k = 0; k < points; ++k) {
        u_[k] = -umax + 2.0 * umax * static_cast<double>(k) / static_cast<double>(points - 1);
        tau_[k] = scale * std::sinh(u_[k]);
    }
    // Exact symmetry and endpoints.
    tau_.front() = -tau_tail;
    tau_.back() = tau_tail;
    if (points % 2 == 1) tau_[points / 2] = 0.0;
}

double SlowGrid::to_u(double tau) const { return std::asinh(tau / scale_); }
double SlowGrid::dtau_du(double u) const { return scale_ * std::cosh(u); }

GridSpline::GridSpline(const SlowGrid& grid, std::vector<double> values)
    : scale_(grid.scale()), tau_min_(grid.tau_min()), tau_max_(grid.tau_max()), spline_(grid.u(), std::move(values)) {}

double GridSpline::value(double tau) const { return spline_.value(std::asinh(tau / scale_)); }

double GridSpline::derivative(double tau) const {
    if (tau < tau_min_ || tau > tau_max_) return 0.0;
    const double u = std::asinh(tau / scale_);
    return spline_.derivative(u) / (scale_ * std::cosh(u));
}

}  // namespace rtip
