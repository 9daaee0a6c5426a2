#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracle.hpp"
#include "rtip/errors.hpp"
#include "rtip/model.hpp"

using namespace rtip;

namespace {

ModelSpec frozen_linear(double k) {
    BoundBox box{-1e6, 1e6, -1.0, 1.0};
    return ModelSpec("lin", std::make_shared<PolynomialField>(std::vector<Monomial>{{k, 1, 0}}, box),
                     Ramp::constant(0.0));
}

}  // namespace

TEST_CASE("jet arithmetic is truncated Taylor arithmetic") {
    const Jet x = Jet::variable(2.0, 3);
    const Jet p = x * x * x - 3.0 * x;  // derivatives at 2: 2, 9, 12, 6
    CHECK(p[0] == doctest::Approx(2.0));
    CHECK(p[1] == doctest::Approx(9.0));
    CHECK(p[2] == doctest::Approx(6.0));
    CHECK(p[3] == doctest::Approx(1.0));
    CHECK(p.derivative(2) == doctest::Approx(12.0));
    CHECK(pow(x, 3)[1] == doctest::Approx(12.0));
    // Resumming about x0 + h reproduces the polynomial exactly.
    CHECK(p.evaluate(0.5) == doctest::Approx(2.5 * 2.5 * 2.5 - 7.5));
    CHECK(p.shifted(0.5)[0] == doctest::Approx(p.evaluate(0.5)));
    CHECK(p.shifted(0.5).shifted(-0.5)[1] == doctest::Approx(9.0));
}

TEST_CASE("quadratic model jets match the closed form") {
    const auto m = make_builtin_model("quad_arctan", {{"zeta", 0.1}});
    const Jet j = m.field->jet_eval(0.0, 0.0, 3);
    CHECK(j[0] == doctest::Approx(0.1));
    CHECK(j[1] == doctest::Approx(0.0));
    CHECK(j[2] == doctest::Approx(-1.0));
    CHECK(j[3] == doctest::Approx(0.0));
    // df/dx = -2 (x - lambda), df/dlambda = 2 (x - lambda)
    CHECK(m.field->dfdx(0.7, 0.2) == doctest::Approx(-1.0));
    CHECK(m.field->param_deriv(0.7, 0.2) == doctest::Approx(1.0));

    const auto lin = frozen_linear(-1.0);
    const Jet jl = lin.field->jet_eval(0.3, 0.0, 2);
    CHECK(jl[0] == doctest::Approx(-0.3));
    CHECK(jl[1] == doctest::Approx(-1.0));
    CHECK(jl[2] == doctest::Approx(0.0));

    BoundBox box;
    PolynomialField c({{2.5, 0, 0}}, box);
    const Jet jc = c.jet_eval(0.4, 0.0, 4);
    CHECK(jc[0] == doctest::Approx(2.5));
    for (int k = 1; k <= 4; ++k) CHECK(jc[k] == 0.0);
}

TEST_CASE("jet field order and domain checks") {
    BoundBox box;
    JetField f([](const Jet& x, double lambda) { return x * x * x - lambda * x; },
               [](double x, double) { return -x; }, box, 2);
    CHECK(f.jet_eval(1.0, 0.5, 2)[1] == doctest::Approx(2.5));
    CHECK_THROWS_AS(f.jet_eval(1.0, 0.5, 3), OrderTooHigh);
    CHECK_THROWS_AS(f.jet_eval(2e6, 0.5, 1), OutOfDomain);
    CHECK_THROWS_AS(f.jet_eval(0.0, 1.5, 1), OutOfDomain);
}

TEST_CASE("scaled field multiplies every jet coefficient") {
    const auto m = make_builtin_model("quad_arctan", {{"zeta", 0.1}});
    const auto s = scaled_field(m.field, 2.0);
    const Jet a = m.field->jet_eval(0.4, 0.1, 2), b = s->jet_eval(0.4, 0.1, 2);
    for (int k = 0; k <= 2; ++k) CHECK(b[k] == doctest::Approx(2.0 * a[k]));
    CHECK(s->param_deriv(0.4, 0.1) == doctest::Approx(2.0 * m.field->param_deriv(0.4, 0.1)));
}

TEST_CASE("arctan ramp invariants hold and the tail matches the closed form") {
    const Ramp ramp(RampKind::arctan, -1.0, 1.0);
    for (double tau : {-50.0, -1.0, 0.0, 0.3, 7.0}) {
        CHECK(ramp.eval(tau) == doctest::Approx(oracle::arctan_ramp(tau)));
        CHECK(ramp.deriv(tau) == doctest::Approx(oracle::arctan_ramp_deriv(tau)));
    }
    std::vector<double> grid;
    for (double t = -50.0; t <= 50.0 + 1e-9; t += 0.1) grid.push_back(t);
    CHECK(validate_ramp(ramp, grid).empty());
    CHECK(validate_ramp(ramp, default_ramp_grid(ramp, 1.0)).empty());
    // Lambda'(tau) = 1e-8 solves (2/pi) / (1 + tau^2) = 1e-8.
    CHECK(ramp.tau_tail() == doctest::Approx(std::sqrt(2.0 / std::numbers::pi * 1e8 - 1.0)).epsilon(1e-6));
}

TEST_CASE("tanh ramp passes validation") {
    const Ramp ramp(RampKind::tanh, -1.0, 1.0);
    CHECK(ramp.eval(0.0) == doctest::Approx(0.0));
    CHECK(ramp.eval(3.0) == doctest::Approx(std::tanh(3.0)));
    CHECK(validate_ramp(ramp, default_ramp_grid(ramp, 0.05)).empty());
}

TEST_CASE("invalid candidate ramps are reported") {
    std::vector<double> grid;
    for (double t = -10.0; t <= 10.0 + 1e-9; t += 0.5) grid.push_back(t);

    RampProbe decreasing{[](double t) { return -std::tanh(t); },
                         [](double t) { return -1.0 / (std::cosh(t) * std::cosh(t)); },
                         -1.0, 1.0, 1e-8, 10.0};
    const auto v = validate_ramp(decreasing, grid);
    REQUIRE_FALSE(v.empty());
    CHECK(v.front().kind == RampViolation::Kind::monotonicity);

    RampProbe overshoot{[](double t) { return 1.5 * std::tanh(t); },
                        [](double t) { return 1.5 / (std::cosh(t) * std::cosh(t)); },
                        -1.0, 1.0, 1e-8, 10.0};
    bool range = false;
    for (const auto& x : validate_ramp(overshoot, grid)) range = range || x.kind == RampViolation::Kind::range;
    CHECK(range);

    RampProbe slow_tail{[](double t) { return std::tanh(t / 20.0); },
                        [](double t) { return 1.0 / (20.0 * std::cosh(t / 20.0) * std::cosh(t / 20.0)); },
                        -1.0, 1.0, 1e-8, 10.0};
    bool tail = false;
    for (const auto& x : validate_ramp(slow_tail, grid)) tail = tail || x.kind == RampViolation::Kind::tail_decay;
    CHECK(tail);
}

TEST_CASE("builtin registry") {
    CHECK(builtin_model_names().size() == 3);
    CHECK_THROWS_AS(make_builtin_model("quad_arctan", {{"zeta", -1.0}}), ConfigError);
    CHECK_THROWS_AS(make_builtin_model("quad_arctan", {{"zeta", 0.0}}), ConfigError);
    CHECK_THROWS_AS(make_builtin_model("cubic", {}), ConfigError);
    CHECK_THROWS_AS(make_builtin_model("quad_tanh", {{"mu", 1.0}}), ConfigError);
    const auto frozen = make_builtin_model("quad_frozen", {{"zeta", 0.25}, {"lambda0", 0.5}});
    CHECK(frozen.ramp.kind() == RampKind::constant);
    CHECK(frozen.rhs(3.0, 100.0, 1.0) == doctest::Approx(0.0));
}

TEST_CASE("model files parse into polynomial fields") {
    const auto m = parse_model_text(
        "# comment\nname: q\nf: 0.1 - x^2 + 2*x*lambda - lambda^2\nramp: arctan\nrange: -1 1\n");
    const auto ref = make_builtin_model("quad_arctan", {{"zeta", 0.1}});
    CHECK(m.name == "q");
    for (double x : {-2.0, 0.0, 0.7})
        for (double l : {-0.9, 0.0, 0.4}) CHECK(m.field->eval(x, l) == doctest::Approx(ref.field->eval(x, l)));

    CHECK_THROWS_AS(parse_model_text("f: x^2 +\nramp: tanh\nrange: -1 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_model_text("f: y\nramp: tanh\nrange: -1 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_model_text("f: x^-1\nramp: tanh\nrange: -1 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_model_text("f: x\nramp: cosine\nrange: -1 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_model_text("f: x\nramp: tanh\n"), ConfigError);
    CHECK_THROWS_AS(parse_model_text("f: x\nbogus: 1\nramp: tanh\nrange: -1 1\n"), ConfigError);
    CHECK_THROWS_AS(load_model_file("/nonexistent/model.txt"), ConfigError);
}

TEST_CASE("trusted box must cover the ramp") {
    BoundBox narrow{-1e6, 1e6, -0.5, 0.5};
    auto field = std::make_shared<PolynomialField>(quadratic_terms(0.1), narrow);
    CHECK_THROWS_AS(ModelSpec("bad", field, Ramp(RampKind::arctan, -1.0, 1.0)), ConfigError);
}

TEST_CASE("jets agree with finite differences") {
    for (const char* name : {"quad_arctan", "quad_tanh"}) {
        const auto rep = check_jet_consistency(make_builtin_model(name, {{"zeta", 0.1}}), 100, 1);
        CHECK(rep.samples == 100);
        CHECK(rep.max_rel_error_first < 1e-5);
        CHECK(rep.max_rel_error_second < 1e-5);
    }
}
