#include <doctest.h>

#include <cmath>

#include "oracle.hpp"
#include "rtip/errors.hpp"
#include "rtip/integrate.hpp"
#include "rtip/tipping.hpp"

using namespace rtip;

namespace {

const TippingSetup& setup01() {
    static const TippingSetup s = make_tipping_setup(make_builtin_model("quad_arctan", {{"zeta", 0.1}}), 1);
    return s;
}

const TippingSetup& setup11() {
    static const TippingSetup s = make_tipping_setup(make_builtin_model("quad_arctan", {{"zeta", 1.1}}), 1);
    return s;
}

const TippingReport& report01() {
    static const TippingReport rep = [] {
        DetectOptions opts;
        opts.r_min = 0.05;
        opts.r_max = 5.0;
        return detect_tipping(setup01(), opts);
    }();
    return rep;
}

ProbeConfig probe(double r, double tau, double eps = 0.2) {
    ProbeConfig c;
    c.r = r;
    c.tau = tau;
    c.epsilon = eps;
    return c;
}

}  // namespace

TEST_CASE("setup picks the stable and unstable branches") {
    const auto& s = setup01();
    CHECK(s.orientation == 1.0);
    CHECK(s.gap == doctest::Approx(2 * std::sqrt(0.1)).epsilon(1e-8));
    CHECK(s.stable->kind() == Stability::stable);
    CHECK(s.unstable->kind() == Stability::unstable);
    CHECK(s.unstable->endpoint_plus() == doctest::Approx(1 - std::sqrt(0.1)));
}

TEST_CASE("detected tipping rate agrees with an RK4 bisection") {
    const auto& rep = report01();
    REQUIRE(rep.r_star);
    const double reference = oracle::tipping_rate(0.1, 0.25, 0.32, 1e-5);
    CHECK(reference == doctest::Approx(0.2804).epsilon(1e-3));
    CHECK(std::abs(*rep.r_star - reference) / reference < 2e-3);
    CHECK(rep.classification == Classification::visible_tipping);
    CHECK(*rep.r_hi - *rep.r_lo <= 1e-3 * *rep.r_star * 1.0001);
    CHECK(rep.brackets.size() == 1);
}

TEST_CASE("discriminant signs around the bracket") {
    const auto& s = setup01();
    for (double r : {0.05, 0.1}) {
        for (double tau : {0.0, 10.0, 30.0}) {
            const auto d = discriminants(s, probe(r, tau));
            CHECK(d.d_out.sign() > 0);
            CHECK(d.d_in.sign() > 0);
        }
    }
    CHECK(d_out(s, probe(0.2, 0.0)).sign() > 0);
    CHECK(d_in(s, probe(0.2, 30.0)).sign() > 0);
    CHECK(d_out(s, probe(0.29, 30.0)).sign() < 0);
    CHECK(d_out(s, probe(1.0, 30.0)).sign() < 0);
    // Inside the (b)-window r_star - delta < r <= r_star the inner probes have crossed.
    CHECK(d_in(s, probe(*report01().r_lo, 5.0)).sign() < 0);
    CHECK(d_out(s, probe(*report01().r_lo, 5.0)).sign() > 0);
}

TEST_CASE("probes respect the reflection symmetry of the quadratic model") {
    // x -> -x, t -> -t maps the model to itself and swaps the two branches.
    for (double r : {0.1, 2.0}) {
        const auto d = discriminants(setup01(), probe(r, 5.0));
        CHECK(d.probes.y_plus.value == doctest::Approx(-d.probes.y_minus.value).epsilon(1e-7));
        CHECK(d.probes.z_plus.value == doctest::Approx(-d.probes.z_minus.value).epsilon(1e-7));
        CHECK(d.d_out.value == doctest::Approx(d.probes.y_minus.value - d.probes.y_plus.value));
        CHECK_FALSE(d.d_out.escape_verdict);
    }
}

TEST_CASE("oracle gap changes sign across the bracket") {
    const auto& rep = report01();
    CHECK(oracle_gap_at_zero(setup01(), 0.2) > 0);
    CHECK(oracle_gap_at_zero(setup01(), *rep.r_hi * 1.01) < 0);
    CHECK(oracle_gap_at_zero(setup01(), 0.2) ==
          doctest::Approx(oracle::attractor(0.1, 0.2, 0.0) - oracle::repeller(0.1, 0.2, 0.0)).epsilon(1e-6));
}

TEST_CASE("no tipping for zeta = 1.1 or a constant ramp") {
    DetectOptions opts;
    opts.r_min = 0.05;
    opts.r_max = 2.0;
    const auto rep = detect_tipping(setup11(), opts);
    CHECK(rep.classification == Classification::end_point_tracking);
    CHECK_FALSE(rep.r_star);

    const auto frozen = make_tipping_setup(make_builtin_model("quad_frozen", {{"zeta", 0.1}}), 1);
    const auto rf = detect_tipping(frozen, DetectOptions{});
    CHECK(rf.classification == Classification::end_point_tracking);
    for (double r : {0.1, 1.0, 4.0}) {
        const auto d = discriminants(frozen, probe(r, 30.0));
        CHECK(d.d_out.value > 0);
        CHECK(d.d_in.value > 0);
    }
}

TEST_CASE("configuration errors") {
    DetectOptions opts;
    opts.epsilon = 0.4;  // >= d_0 / 2 = sqrt(0.1)
    CHECK_THROWS_AS(detect_tipping(setup01(), opts), ConfigError);
    DetectOptions late;
    late.r_min = 0.3;
    CHECK_THROWS_AS(detect_tipping(setup01(), late), PreconditionError);
}

TEST_CASE("series order does not move the tipping rate") {
    const auto s2 = make_tipping_setup(make_builtin_model("quad_arctan", {{"zeta", 0.1}}), 2);
    const auto rep = detect_tipping(s2, DetectOptions{});
    REQUIRE(rep.r_star);
    CHECK(std::abs(*rep.r_star - *report01().r_star) < 2e-3 * *rep.r_star);
}

TEST_CASE("time rescaling leaves the bracket invariant") {
    const double c = 2.0;
    const auto base = make_builtin_model("quad_arctan", {{"zeta", 0.1}});
    const ModelSpec scaled("scaled", scaled_field(base.field, c), base.ramp);
    const auto setup = make_tipping_setup(scaled, 1);
    DetectOptions opts;
    opts.r_min = 0.05 * c;
    opts.r_max = 5.0 * c;
    opts.tau = 30.0 / c;
    const auto rep = detect_tipping(setup, opts);
    REQUIRE(rep.r_star);
    CHECK(std::abs(*rep.r_star / c - *report01().r_star) < 2e-3 * *report01().r_star);
}

TEST_CASE("delta curve") {
    const auto& s = setup01();
    const double rs = *report01().r_star;
    const auto curve = delta_curve(s, 0.2, rs, {0.0, 5.0, 10.0, 20.0, 30.0});
    REQUIRE(curve.size() == 5);
    for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i].delta <= curve[i - 1].delta);
    CHECK(curve.back().delta < curve.front().delta / 5);
    CHECK(curve[1].value == doctest::Approx(rs - curve[1].delta));
    // Where D_in is already positive the reported delta is zero.
    const auto zero = delta_curve(s, 0.2, 0.1, {0.0});
    CHECK(zero[0].delta == 0.0);
}

TEST_CASE("order preservation and collision of the pullback pair") {
    const auto& s = setup01();
    double prev = INFINITY;
    for (double r : {0.2, 0.25, 0.27, 0.28, *report01().r_lo}) {
        const auto a = estimate_pullback_attractor(s.model, *s.stable, r, -20.0, 20.0);
        const auto b = estimate_pullback_repeller(s.model, *s.unstable, r, -20.0, 20.0);
        double closest = INFINITY;
        for (int i = 0; i <= 400; ++i) {
            const double t = -20.0 + i * 0.1;
            const double gap = a.value(t) - b.value(t);
            CHECK(gap > 0);
            closest = std::min(closest, gap);
        }
        CHECK(closest < prev);
        prev = closest;
    }
    CHECK(prev < 1e-2);
}

TEST_CASE("end-point tracking certificate") {
    const auto big = make_tipping_setup(make_builtin_model("quad_arctan", {{"zeta", 1.1}}), 1);
    const auto v = end_point_tracking_check(big, 0.2, 0.2, 0.0, 0.5, 0.5, 3.0);
    CHECK(v.certified);
    CHECK(v.first_inequality);
    CHECK(v.second_inequality);
    CHECK(v.empirical_constant);

    const auto w = end_point_tracking_check(setup01(), 0.28, 0.2, 0.0, 2.9, 2.9, 0.314);
    CHECK_FALSE(w.certified);
    CHECK_FALSE(w.reason.empty());
}

TEST_CASE("late proximity") {
    const auto hit = late_proximity_check(setup01(), 0.2, 0.05, 20.0);
    CHECK(hit.found);
    REQUIRE(hit.t_eps);
    CHECK(*hit.t_eps > 20.0);
    CHECK(hit.horizon == doctest::Approx(20.0 + 200.0 / 0.2));
    const auto miss = late_proximity_check(setup01(), 0.5, 0.05, 20.0);
    CHECK_FALSE(miss.found);
    const auto frozen = make_tipping_setup(make_builtin_model("quad_frozen", {{"zeta", 0.1}}), 1);
    CHECK(late_proximity_check(frozen, 1.0, 0.05, 5.0).found);
}

TEST_CASE("stability indicator") {
    const auto& s = setup01();
    // First order: sup_t f_x = -2 (sqrt(zeta) + r a_1(0)) with a_1(0) = -(2/pi) / (2 sqrt(zeta)).
    const double r = 0.05;
    const double first_order = -2 * std::sqrt(0.1) + 2 * r * (2 / std::numbers::pi) / (2 * std::sqrt(0.1));
    const double ind = stability_indicator(s, r);
    CHECK(ind < 0);
    CHECK(std::abs(ind - first_order) < 0.05);

    const auto frozen = make_tipping_setup(make_builtin_model("quad_frozen", {{"zeta", 0.1}}), 1);
    CHECK(stability_indicator(frozen, 1.0) == doctest::Approx(-2 * std::sqrt(0.1)).epsilon(1e-9));

    const auto cross = indicator_crossing(s, 0.05, 0.3);
    REQUIRE(cross);
    CHECK(stability_indicator(s, *cross * 0.999) < 0);
    CHECK(stability_indicator(s, *cross * 1.001) >= 0);
}

TEST_CASE("report serialization") {
    const auto& rep = report01();
    const std::string js = tipping_report_json(rep);
    for (const char* key : {"\"r_star\"", "\"bracket\"", "\"classification\"", "\"evidence\"", "\"r_range\""})
        CHECK(js.find(key) != std::string::npos);
    const std::string csv = discriminant_csv(rep.evidence);
    CHECK(csv.rfind("r,tau,d_out,d_in,flags", 0) == 0);
}

TEST_CASE("empirical sign-settling horizons") {
    DetectOptions opts;
    for (int k = 0; k <= 30; k += 3) opts.settle_taus.push_back(k);
    const auto rep = detect_tipping(setup01(), opts);
    REQUIRE(rep.tau_in_settled);
    REQUIRE(rep.tau_out_settled);
    for (double tau = *rep.tau_in_settled; tau <= 30; tau += 3)
        CHECK(d_in(setup01(), probe(*rep.r_lo, tau)).sign() > 0);
    if (*rep.tau_in_settled > 0)
        CHECK(d_in(setup01(), probe(*rep.r_lo, *rep.tau_in_settled - 3)).sign() < 0);
}
