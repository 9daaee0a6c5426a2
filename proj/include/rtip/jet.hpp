#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rtip {

/// Truncated Taylor polynomial of a scalar function of x about a base point.
///
/// coeffs()[j] holds the j-th Taylor coefficient, i.e. the j-th x-derivative
/// divided by j!. Arithmetic is truncated at the jet's order, so a model can
/// build the jet of f by evaluating its formula on Jet::variable(x0, n).
class Jet {
public:
    Jet() : coeffs_(1, 0.0) {}
    explicit Jet(std::vector<double> coeffs);

    static Jet constant(double value, int order);
    static Jet variable(double x0, int order);

    int order() const noexcept { return static_cast<int>(coeffs_.size()) - 1; }
    std::span<const double> coeffs() const noexcept { return coeffs_; }
    double operator[](std::size_t j) const { return coeffs_.at(j); }
    double& operator[](std::size_t j) { return coeffs_.at(j); }

    double value() const noexcept { return coeffs_.front(); }

    /// j-th x-derivative at the base point (coeffs[j] * j!).
    double derivative(int j) const;

    /// Horner resummation of the polynomial at offset h from the base point.
    double evaluate(double h) const noexcept;

    /// Same polynomial re-expanded about base + h (exact for polynomials).
    Jet shifted(double h) const;

    bool all_finite() const noexcept;

    Jet& operator+=(const Jet& other);
    Jet& operator-=(const Jet& other);
    Jet& operator*=(const Jet& other);
    Jet& operator+=(double c);
    Jet& operator*=(double c);

    friend Jet operator+(Jet a, const Jet& b) { return a += b; }
    friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
    friend Jet operator*(Jet a, const Jet& b) { return a *= b; }
    friend Jet operator+(Jet a, double c) { return a += c; }
    friend Jet operator+(double c, Jet a) { return a += c; }
    friend Jet operator-(Jet a, double c) { return a += -c; }
    friend Jet operator-(double c, Jet a) { a *= -1.0; return a += c; }
    friend Jet operator*(Jet a, double c) { return a *= c; }
    friend Jet operator*(double c, Jet a) { return a *= c; }
    friend Jet operator-(Jet a) { return a *= -1.0; }

private:
    std::vector<double> coeffs_;
};

Jet pow(const Jet& base, int exponent);

}  // namespace rtip
