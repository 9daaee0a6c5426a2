#include "rtip/field.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rtip/errors.hpp"

namespace rtip {

namespace {

// Relative slack on the lambda range; ramps hit their limits only asymptotically
// but roundoff can land a hair outside.
constexpr double kLambdaSlack = 1e-12;

double powi(double base, int e) {
    double r = 1.0;
    for (int k = 0; k < e; ++k) r *= base;
    return r;
}

}  // namespace

bool BoundBox::contains(double x, double lambda) const noexcept {
    const double slack = kLambdaSlack * std::max(1.0, std::abs(lambda_max) + std::abs(lambda_min));
    return x >= x_min && x <= x_max && lambda >= lambda_min - slack && lambda <= lambda_max + slack;
}

double ScalarField::dfdx(double x, double lambda) const { return raw_jet(x, lambda, 1)[1]; }

Jet ScalarField::jet_eval(double x0, double lambda, int n) const {
    if (n < 0) throw OrderTooHigh("jet order must be non-negative");
    if (n > max_order()) {
        std::ostringstream os;
        os << "jet order " << n << " exceeds the model's maximum differentiability " << max_order();
        throw OrderTooHigh(os.str());
    }
    if (!box_.contains(x0, lambda)) {
        std::ostringstream os;
        os << "point (x=" << x0 << ", lambda=" << lambda << ") outside the trusted box";
        throw OutOfDomain(os.str());
    }
    return raw_jet(x0, lambda, n);
}

PolynomialField::PolynomialField(std::vector<Monomial> terms, BoundBox box)
    : ScalarField(box), terms_(std::move(terms)) {
    for (const auto& t : terms_) {
        if (t.x_power < 0 || t.lambda_power < 0) throw ConfigError("monomial powers must be non-negative");
        if (!std::isfinite(t.coeff)) throw ConfigError("monomial coefficient must be finite");
        x_degree_ = std::max(x_degree_, t.x_power);
    }
}

std::vector<double> PolynomialField::x_coefficients(double lambda) const {
    std::vector<double> p(static_cast<std::size_t>(x_degree_) + 1, 0.0);
    for (const auto& t : terms_) p[static_cast<std::size_t>(t.x_power)] += t.coeff * powi(lambda, t.lambda_power);
    return p;
}

double PolynomialField::eval(double x, double lambda) const {
    double acc = 0.0;
    for (const auto& t : terms_) acc += t.coeff * powi(x, t.x_power) * powi(lambda, t.lambda_power);
    return acc;
}

double PolynomialField::dfdx(double x, double lambda) const {
    double acc = 0.0;
    for (const auto& t : terms_)
        if (t.x_power > 0) acc += t.coeff * t.x_power * powi(x, t.x_power - 1) * powi(lambda, t.lambda_power);
    return acc;
}

double PolynomialField::param_deriv(double x, double lambda) const {
    double acc = 0.0;
    for (const auto& t : terms_)
        if (t.lambda_power > 0) acc += t.coeff * t.lambda_power * powi(x, t.x_power) * powi(lambda, t.lambda_power - 1);
    return acc;
}

Jet PolynomialField::raw_jet(double x0, double lambda, int n) const {
    const Jet about_zero(x_coefficients(lambda));
    const Jet about_x0 = about_zero.shifted(x0);
    std::vector<double> c(static_cast<std::size_t>(n) + 1, 0.0);
    for (int j = 0; j <= std::min(n, about_x0.order()); ++j) c[static_cast<std::size_t>(j)] = about_x0[static_cast<std::size_t>(j)];
    return Jet(std::move(c));
}

JetField::JetField(Formula formula, ParamDeriv param_deriv, BoundBox box, int max_order)
    : ScalarField(box), formula_(std::move(formula)), param_deriv_(std::move(param_deriv)), max_order_(max_order) {}

double JetField::eval(double x, double lambda) const { return formula_(Jet::constant(x, 0), lambda).value(); }

namespace {

class ScaledField final : public ScalarField {
public:
    ScaledField(std::shared_ptr<const ScalarField> inner, double scale)
        : ScalarField(inner->bound_box()), inner_(std::move(inner)), scale_(scale) {}

    double eval(double x, double lambda) const override { return scale_ * inner_->eval(x, lambda); }
    double param_deriv(double x, double lambda) const override { return scale_ * inner_->param_deriv(x, lambda); }
    double dfdx(double x, double lambda) const override { return scale_ * inner_->dfdx(x, lambda); }
    int max_order() const noexcept override { return inner_->max_order(); }

protected:
    Jet raw_jet(double x0, double lambda, int n) const override { return scale_ * inner_->jet_eval(x0, lambda, n); }

private:
    std::shared_ptr<const ScalarField> inner_;
    double scale_;
};

}  // namespace

std::shared_ptr<const ScalarField> scaled_field(std::shared_ptr<const ScalarField> inner, double scale) {
    if (!(scale > 0.0)) throw ConfigError("field scale must be positive");
    return std::make_shared<ScaledField>(std::move(inner), scale);
}

}  // namespace rtip
