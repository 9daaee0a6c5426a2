#include <doctest.h>

#include <cmath>
#include <random>

#include "oracle.hpp"
#include "rtip/equilibria.hpp"
#include "rtip/errors.hpp"
#include "rtip/integrate.hpp"
#include "rtip/model.hpp"

using namespace rtip;

namespace {

ModelSpec frozen_poly(std::vector<Monomial> terms) {
    return ModelSpec("poly", std::make_shared<PolynomialField>(std::move(terms), BoundBox{}), Ramp::constant(0.0));
}

struct Quad {
    ModelSpec model;
    QuasiStaticBranch stable, unstable;
};

Quad quad(double zeta) {
    auto model = make_builtin_model("quad_arctan", {{"zeta", zeta}});
    auto grid = std::make_shared<SlowGrid>(model.ramp.tau_tail(), 4001);
    auto s = trace_branch(model.field, model.ramp, find_equilibria(*model.field, -1.0).back(), grid);
    auto u = trace_branch(model.field, model.ramp, find_equilibria(*model.field, 1.0).front(), grid);
    return {model, s, u};
}

}  // namespace

TEST_CASE("exponential decay matches e^-t") {
    const auto m = frozen_poly({{-1.0, 1, 0}});
    const auto tr = solve_ivp(m, 1.0, 0.0, 1.0, 1.0);
    CHECK(tr.status() == TrajectoryStatus::completed);
    CHECK(std::abs(tr.final_state() - std::exp(-1.0)) < 1e-8);
    double dense = 0.0;
    for (int i = 0; i <= 100; ++i) {
        const double t = i / 100.0;
        dense = std::max(dense, std::abs(tr.eval(t) - std::exp(-t)));
    }
    CHECK(dense < 1e-8);
}

TEST_CASE("backward integration stores increasing times") {
    const auto m = frozen_poly({{-1.0, 1, 0}});
    const auto tr = solve_ivp(m, 1.0, 1.0, std::exp(-1.0), 0.0);
    CHECK(std::abs(tr.final_state() - 1.0) < 1e-8);
    for (std::size_t i = 1; i < tr.samples().size(); ++i) CHECK(tr.samples()[i].t > tr.samples()[i - 1].t);
    CHECK(tr.t_begin() == 0.0);
}

TEST_CASE("blow-up of x' = x^2 is detected at t = 1") {
    const auto m = frozen_poly({{1.0, 2, 0}});
    const auto tr = solve_ivp(m, 1.0, 0.0, 1.0, 2.0);
    REQUIRE(tr.escaped());
    REQUIRE(tr.escape_time());
    // x(t) = 1 / (1 - t) reaches 0.99e6 at t = 1 - 1 / 0.99e6.
    CHECK(std::abs(*tr.escape_time() - 1.0) < 1e-3);
    CHECK(std::abs(tr.final_state()) >= 0.99e6 * (1 - 1e-9));
    CHECK(tr.value_or_escape(1.5) == INFINITY);
}

TEST_CASE("global error scales with the tolerance") {
    const auto m = frozen_poly({{-1.0, 1, 0}});
    double prev = INFINITY;
    for (double tol : {1e-6, 1e-8, 1e-10}) {
        IntegratorOptions opts;
        opts.tol = tol;
        const double err = std::abs(solve_ivp(m, 1.0, 0.0, 1.0, 5.0, opts).final_state() - std::exp(-5.0));
        CHECK(err < 100 * tol);
        CHECK(err < prev);
        prev = err;
    }
}

TEST_CASE("stiff decay underflows the step size") {
    const auto m = frozen_poly({{-1e14, 1, 0}});
    CHECK_THROWS_AS(solve_ivp(m, 1.0, 0.0, 1.0, 1.0), ToleranceFailure);
}

TEST_CASE("agreement with a fixed-step RK4 reference on the ramped model") {
    const auto m = make_builtin_model("quad_arctan", {{"zeta", 0.1}});
    const double x0 = oracle::arctan_ramp(-4.0) + std::sqrt(0.1);
    const auto tr = solve_ivp(m, 0.2, -20.0, x0, 20.0);
    REQUIRE(tr.status() == TrajectoryStatus::completed);
    const auto rhs = oracle::quad_arctan_rhs(0.1, 0.2);
    for (double t : {-5.0, 0.0, 7.5, 20.0})
        CHECK(std::abs(tr.eval(t) - oracle::rk4(rhs, -20.0, x0, t, 1e-3)) < 1e-8);
}

TEST_CASE("slow drift tracks the stable branch") {
    const auto m = make_builtin_model("quad_arctan", {{"zeta", 0.1}});
    const double r = 0.1;
    const auto tr = solve_ivp(m, r, -400.0, oracle::arctan_ramp(-40.0) + std::sqrt(0.1), 400.0);
    REQUIRE(tr.status() == TrajectoryStatus::completed);
    CHECK(std::abs(tr.final_state() - (oracle::arctan_ramp(40.0) + std::sqrt(0.1))) < 1e-3);
}

TEST_CASE("the quadratic model at zeta = 0.1, r = 0.5 leaves through the repeller") {
    // The ramp outruns the attractor at this rate, so x escapes to -infinity.
    const auto m = make_builtin_model("quad_arctan", {{"zeta", 0.1}});
    const auto tr = solve_ivp(m, 0.5, -40.0, oracle::arctan_ramp(-20.0) + std::sqrt(0.1), 40.0);
    CHECK(tr.escaped());
    CHECK(tr.final_state() < 0);
}

TEST_CASE("pullback solutions of frozen linear fields are zero") {
    const auto attract = frozen_poly({{-1.0, 1, 0}});
    auto grid = std::make_shared<SlowGrid>(1.0, 101);
    const auto sb = trace_branch(attract.field, attract.ramp, find_equilibria(*attract.field, 0.0)[0], grid);
    const auto a = estimate_pullback_attractor(attract, sb, 1.0, -5.0, 5.0);
    CHECK(a.convergence_gap < 1e-12);
    CHECK(std::abs(a.value(0.0)) < 1e-12);

    const auto repel = frozen_poly({{1.0, 1, 0}});
    const auto ub = trace_branch(repel.field, repel.ramp, find_equilibria(*repel.field, 0.0)[0], grid);
    const auto b = estimate_pullback_repeller(repel, ub, 1.0, -5.0, 5.0);
    CHECK(std::abs(b.value(0.0)) < 1e-12);
}

TEST_CASE("pullback attractor and repeller at zeta = 1.1, r = 0.5") {
    const auto q = quad(1.1);
    const auto a = estimate_pullback_attractor(q.model, q.stable, 0.5, -20.0, 20.0);
    const auto b = estimate_pullback_repeller(q.model, q.unstable, 0.5, -20.0, 20.0);
    REQUIRE_FALSE(a.escaped());
    REQUIRE_FALSE(b.escaped());
    CHECK(std::abs(a.value(20.0) - q.stable.value(10.0)) < 1e-2);
    CHECK(std::abs(b.value(-20.0) - q.unstable.value(-10.0)) < 1e-2);
    for (int i = 0; i <= 80; ++i) {
        const double t = -20.0 + i * 0.5;
        CHECK(a.value(t) - b.value(t) > std::sqrt(1.1));
    }
}

TEST_CASE("fast ramp: the attractor lags below the moving equilibrium") {
    const auto q = quad(1.1);
    const auto a = estimate_pullback_attractor(q.model, q.stable, 2.0, -8.0, 8.0);
    REQUIRE_FALSE(a.escaped());
    double prev = -INFINITY;
    for (int i = 0; i <= 160; ++i) {
        const double t = -8.0 + i * 0.1;
        CHECK(a.value(t) < q.stable.value(2.0 * t));
        CHECK(a.value(t) > prev);
        prev = a.value(t);
    }
}

TEST_CASE("pullback estimates against the RK4 oracle") {
    const auto q = quad(0.1);
    const auto a = estimate_pullback_attractor(q.model, q.stable, 0.2, -20.0, 20.0);
    const auto b = estimate_pullback_repeller(q.model, q.unstable, 0.2, -20.0, 20.0);
    CHECK(std::abs(a.value(0.0) - oracle::attractor(0.1, 0.2, 0.0)) < 1e-6);
    CHECK(std::abs(b.value(0.0) - oracle::repeller(0.1, 0.2, 0.0)) < 1e-6);

    PullbackOptions tight;
    tight.tol = 1e-12;
    const auto a2 = estimate_pullback_attractor(q.model, q.stable, 0.2, -20.0, 20.0, tight);
    double diff = 0.0;
    for (int i = 0; i <= 40; ++i) diff = std::max(diff, std::abs(a.value(-20.0 + i) - a2.value(-20.0 + i)));
    CHECK(diff < 1e-8);
}

TEST_CASE("anchor gaps shrink") {
    const auto q = quad(0.1);
    PullbackOptions opts;
    opts.anchor_spacing = 1.0;
    const auto a = estimate_pullback_attractor(q.model, q.stable, 0.2, -20.0, 20.0, opts);
    const auto& g = a.anchor_gaps;
    REQUIRE(g.size() >= 3);
    for (std::size_t i = g.size() - 3; i + 1 < g.size(); ++i) CHECK(g[i + 1] <= g[i]);
    CHECK(a.convergence_gap == g.back());
}

TEST_CASE("pullback attractor attracts neighbours and interior states") {
    const auto q = quad(0.1);
    const double r = 0.2;
    const auto a = estimate_pullback_attractor(q.model, q.stable, r, -30.0, 40.0);
    const auto b = estimate_pullback_repeller(q.model, q.unstable, r, -30.0, 40.0);
    for (double d : {-1e-2, 1e-2}) {
        const auto tr = solve_ivp(q.model, r, -30.0, a.value(-30.0) + d, -10.0);
        CHECK(std::abs(tr.final_state() - a.value(-10.0)) < 1e-6);
    }
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 20; ++i) {
        const double lo = b.value(-5.0), hi = a.value(-5.0);
        const double x0 = lo + (0.05 + 0.9 * u(rng)) * (hi - lo);
        const auto tr = solve_ivp(q.model, r, -5.0, x0, 40.0);
        REQUIRE(tr.status() == TrajectoryStatus::completed);
        CHECK(std::abs(tr.final_state() - a.value(40.0)) < 1e-3);
    }
}

TEST_CASE("non-convergence is reported") {
    const auto q = quad(0.1);
    PullbackOptions opts;
    opts.max_anchors = 1;
    CHECK_THROWS_AS(estimate_pullback_attractor(q.model, q.stable, 0.2, -5.0, 5.0, opts), NoConvergence);
}

TEST_CASE("trajectory csv") {
    const auto m = frozen_poly({{-1.0, 1, 0}});
    const std::string csv = trajectory_csv(solve_ivp(m, 1.0, 0.0, 1.0, 1.0));
    CHECK(csv.find("t,x") != std::string::npos);
    CHECK(csv.find("completed") != std::string::npos);
}
