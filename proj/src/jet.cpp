#include "rtip/jet.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rtip {

Jet::Jet(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) throw std::invalid_argument("Jet needs at least one coefficient");
}

Jet Jet::constant(double value, int order) {
    if (order < 0) throw std::invalid_argument("negative jet order");
    std::vector<double> c(static_cast<std::size_t>(order) + 1, 0.0);
    c[0] = value;
    return Jet(std::move(c));
}

Jet Jet::variable(double x0, int order) {
    Jet j = constant(x0, order);
    if (order >= 1) j.coeffs_[1] = 1.0;
    return j;
}

double Jet::derivative(int j) const {
    double fact = 1.0;
    for (int k = 2; k <= j; ++k) fact *= k;
    return coeffs_.at(static_cast<std::size_t>(j)) * fact;
}

double Jet::evaluate(double h) const noexcept {
    double acc = 0.0;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * h + *it;
    return acc;
}

Jet Jet::shifted(double h) const {
    // Repeated synthetic division (Taylor shift).
    std::vector<double> c = coeffs_;
    const std::size_t n = c.size();
    for (std::size_t i = 0; i + 1 < n; ++i)
        for (std::size_t k = n - 1; k > i; --k) c[k - 1] += h * c[k];
    return Jet(std::move(c));
}

bool Jet::all_finite() const noexcept {
    return std::all_of(coeffs_.begin(), coeffs_.end(), [](double v) { return std::isfinite(v); });
}

Jet& Jet::operator+=(const Jet& other) {
    if (other.order() != order()) throw std::invalid_argument("jet order mismatch");
    for (std::size_t j = 0; j < coeffs_.size(); ++j) coeffs_[j] += other.coeffs_[j];
    return *this;
}

Jet& Jet::operator-=(const Jet& other) {
    if (other.order() != order()) throw std::invalid_argument("jet order mismatch");
    for (std::size_t j = 0; j < coeffs_.size(); ++j) coeffs_[j] -= other.coeffs_[j];
    return *this;
}

Jet& Jet::operator*=(const Jet& other) {
    if (other.order() != order()) throw std::invalid_argument("jet order mismatch");
    const std::size_t n = coeffs_.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; i + k < n; ++k) out[i + k] += coeffs_[i] * other.coeffs_[k];
    coeffs_ = std::move(out);
    return *this;
}

Jet& Jet::operator+=(double c) {
    coeffs_[0] += c;
    return *this;
}

Jet& Jet::operator*=(double c) {
    for (double& v : coeffs_) v *= c;
    return *this;
}

Jet pow(const Jet& base, int exponent) {
    if (exponent < 0) throw std::invalid_argument("negative jet exponent");
    Jet result = Jet::constant(1.0, base.order());
    Jet b = base;
    while (exponent > 0) {
        if (exponent & 1) result *= b;
        exponent >>= 1;
        if (exponent) b *= b;
    }
    return result;
}

}  // namespace rtip
