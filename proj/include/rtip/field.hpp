#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "rtip/jet.hpp"

namespace rtip {

/// Rectangle of (x, lambda) values on which a field is trusted.
struct BoundBox {
    double x_min = -1e6;
    double x_max = 1e6;
    double lambda_min = -1.0;
    double lambda_max = 1.0;

    bool contains(double x, double lambda) const noexcept;
};

/// Scalar vector field f(x, lambda) with x-jets and a first-order lambda hook.
///
/// Implementations provide the raw evaluators; jet_eval() adds the domain and
/// order checks shared by every model.
class ScalarField {
public:
    explicit ScalarField(BoundBox box) : box_(box) {}
    virtual ~ScalarField() = default;

    virtual double eval(double x, double lambda) const = 0;
    virtual double param_deriv(double x, double lambda) const = 0;
    /// Highest x-derivative order the model can supply.
    virtual int max_order() const noexcept = 0;

    /// First x-derivative; defaults to the order-1 jet.
    virtual double dfdx(double x, double lambda) const;

    /// Taylor coefficients of x -> f(x, lambda) about x0 up to order n.
    /// Throws OrderTooHigh or OutOfDomain.
    Jet jet_eval(double x0, double lambda, int n) const;

    const BoundBox& bound_box() const noexcept { return box_; }

protected:
    virtual Jet raw_jet(double x0, double lambda, int n) const = 0;

private:
    BoundBox box_;
};

/// One monomial c * x^i * lambda^j.
struct Monomial {
    double coeff = 0.0;
    int x_power = 0;
    int lambda_power = 0;
};

/// f(x, lambda) = sum of monomials; jets are exact.
class PolynomialField final : public ScalarField {
public:
    PolynomialField(std::vector<Monomial> terms, BoundBox box);

    double eval(double x, double lambda) const override;
    double param_deriv(double x, double lambda) const override;
    double dfdx(double x, double lambda) const override;
    int max_order() const noexcept override { return 64; }

    const std::vector<Monomial>& terms() const noexcept { return terms_; }
    int x_degree() const noexcept { return x_degree_; }

protected:
    Jet raw_jet(double x0, double lambda, int n) const override;

private:
    // Coefficients of x^i as polynomials in lambda.
    std::vector<double> x_coefficients(double lambda) const;

    std::vector<Monomial> terms_;
    int x_degree_ = 0;
};

/// Field defined by a formula over truncated Taylor arithmetic.
///
/// The formula receives Jet::variable(x0, n) and must return the jet of f;
/// the lambda derivative is supplied separately.
class JetField final : public ScalarField {
public:
    using Formula = std::function<Jet(const Jet& x, double lambda)>;
    using ParamDeriv = std::function<double(double x, double lambda)>;

    JetField(Formula formula, ParamDeriv param_deriv, BoundBox box, int max_order = 16);

    double eval(double x, double lambda) const override;
    double param_deriv(double x, double lambda) const override { return param_deriv_(x, lambda); }
    int max_order() const noexcept override { return max_order_; }

protected:
    Jet raw_jet(double x0, double lambda, int n) const override { return formula_(Jet::variable(x0, n), lambda); }

private:
    Formula formula_;
    ParamDeriv param_deriv_;
    int max_order_;
};

/// f(x, lambda) = scale * inner(x, lambda); used for time-reparametrization checks.
std::shared_ptr<const ScalarField> scaled_field(std::shared_ptr<const ScalarField> inner, double scale);

}  // namespace rtip
