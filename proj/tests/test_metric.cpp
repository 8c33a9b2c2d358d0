#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lorfol/catalog.hpp"
#include "lorfol/metric.hpp"

using namespace lorfol;

namespace {

Expression E(const char* s) { return parse_expression(s); }

NullMetric cylinder(double lambda) {
    CatalogOverrides ov;
    ov.values["lambda"] = lambda;
    return *catalog_get("incomplete-cylinder", ov).metric;
}

}  // namespace

TEST_CASE("geodesic right-hand sides") {
    NullMetric flat{Expression::constant(0), "x1", "x2", {}, {}};
    StateDerivative d = geodesic_rhs(flat, {0.3, -0.2, 1.5, 2.5, 0.0});
    CHECK(d.dv1 == doctest::Approx(0.0));
    CHECK(d.dv2 == doctest::Approx(0.0));

    NullMetric cyl = cylinder(2.0);
    d = geodesic_rhs(cyl, {0.0, 0.0, 0.0, 3.0, 0.0});
    CHECK(d.dv1 == doctest::Approx(0.0));
    CHECK(d.dv2 == doctest::Approx(std::log(2.0) * 9.0).epsilon(1e-12));

    NullMetric logm{E("-ln(x1)"), "x1", "x2", {}, {}};
    d = geodesic_rhs(logm, {2.0, 0.0, 3.0, 0.0, 0.0});
    CHECK(d.dv1 == doctest::Approx(9.0 / 2.0).epsilon(1e-12));
    CHECK(d.dv2 == doctest::Approx(0.0));
}

TEST_CASE("flat metric: straight lines reach the horizon with zero drift") {
    NullMetric flat{Expression::constant(0), "x1", "x2", {}, {}};
    IntegrationResult r = integrate(flat, {0, 0, 1, 1, 0}, 1e6);
    CHECK(r.verdict.tag == CompletenessVerdict::Tag::ReachedHorizon);
    CHECK(r.verdict.max_energy_drift <= 1e-6);
    CHECK(r.samples.back().x1 == doctest::Approx(1e6).epsilon(1e-9));
}

TEST_CASE("incomplete cylinder blows up at t* = 1/ln lambda") {
    IntegrationResult r = integrate(cylinder(2.0), {0, 0, 0, 1, 0}, 100.0);
    REQUIRE(r.verdict.tag == CompletenessVerdict::Tag::BlowUp);
    double t_true = 1.0 / std::log(2.0);
    CHECK(std::fabs(r.verdict.t_star - t_true) <= 0.01 * t_true);
    // closed form x2(t) = -ln(1 - t ln 2)/ln 2 along the way
    for (const TrajectoryPoint& s : r.samples) {
        if (s.t > 1.2) break;
        double x2 = -std::log(1.0 - s.t * std::log(2.0)) / std::log(2.0);
        CHECK(std::fabs(s.x2 - x2) <= 1e-6 * (1.0 + std::fabs(x2)));
    }
}

TEST_CASE("complete logarithmic metric reaches the horizon") {
    NullMetric logm{E("-ln(x1)"), "x1", "x2", {}, {}};
    IntegrationResult r = integrate(logm, {1.0, 0.0, 1.0, 0.0, 0.0}, 5.0);
    CHECK(r.verdict.tag == CompletenessVerdict::Tag::ReachedHorizon);
    CHECK(r.samples.back().x1 == doctest::Approx(std::exp(5.0)).epsilon(1e-6));
}

TEST_CASE("energy conservation and null-direction closure") {
    // bounded f: v_i = v_i(0) e^{-(f_i(x_i)-f_i(x_i(0)))} stays bounded, complete
    NullMetric wavy{E("sin(x1)+cos(x2)"), "x1", "x2", {}, {}};
    IntegrationResult r = integrate(wavy, {0.1, -0.2, 0.8, 0.5, 0.0}, 50.0);
    CHECK(r.verdict.tag == CompletenessVerdict::Tag::ReachedHorizon);
    CHECK(r.verdict.max_energy_drift <= 1e-6);

    IntegrationResult n = integrate(wavy, {0.1, -0.2, 0.8, 0.0, 0.0}, 50.0);
    for (const TrajectoryPoint& s : n.samples) {
        CHECK(s.v2 == 0.0);  // the ODE decouples exactly
        CHECK(s.x2 == -0.2);
    }
}

TEST_CASE("blow-up estimate is stable under tolerance halving") {
    for (double lambda : {1.5, 2.0, 4.0}) {
        IntegratorOptions coarse;
        IntegratorOptions fine;
        fine.rel_tol = coarse.rel_tol / 2.0;
        IntegrationResult a = integrate(cylinder(lambda), {0, 0, 0, 1, 0}, 100.0, coarse);
        IntegrationResult b = integrate(cylinder(lambda), {0, 0, 0, 1, 0}, 100.0, fine);
        REQUIRE(a.verdict.tag == CompletenessVerdict::Tag::BlowUp);
        REQUIRE(b.verdict.tag == CompletenessVerdict::Tag::BlowUp);
        CHECK(std::fabs(a.verdict.t_star - b.verdict.t_star) <= a.verdict.t_star_uncertainty);
        double t_true = 1.0 / std::log(lambda);
        CHECK(std::fabs(a.verdict.t_star - t_true) <= 0.01 * t_true);
    }
}

TEST_CASE("deck invariance residuals") {
    GridSpec g{{AxisSpec{0.5, 2.0, 8}, AxisSpec{0.0, 1.0, 8}, AxisSpec{0, 0, 1}}};
    CHECK(check_deck_invariance(cylinder(2.0), g) <= 1e-12);

    NullMetric flat{Expression::constant(0), "x1", "x2", DeckMap2{1, 0.7, 1, 1.0}, {}};
    CHECK(check_deck_invariance(flat, g) <= 1e-12);

    NullMetric shifted = cylinder(2.0);
    shifted.deck = DeckMap2{1.0, 0.3, 1.0, 0.0};  // x1 translation, f independent of x1
    CHECK(check_deck_invariance(shifted, g) <= 1e-12);

    NullMetric broken = cylinder(2.0);
    broken.deck = DeckMap2{1.0, 0.0, 1.0, 1.0};  // missing the x1 scaling
    CHECK(check_deck_invariance(broken, g) > 0.1);

    NullMetric nodeck = *catalog_get("desitter-null").metric;
    CHECK_THROWS_AS(check_deck_invariance(nodeck, g), Error);
}

TEST_CASE("quotient projection wrap cases") {
    DeckMap2 deck{2.0, 0.0, 1.0, 1.0};
    std::vector<TrajectoryPoint> traj = {
        {0.0, 1.0, 0.5, 1.0, 1.0, 0.0},   // already in the fundamental domain
        {0.1, 1.0, 1.5, 1.0, 1.0, 0.0},   // single wrap down
        {0.2, 1.0, 2.5, 1.0, 1.0, 0.0},   // double wrap
        {0.3, 1.0, -0.5, 1.0, 1.0, 0.0},  // wrap up
    };
    WrappedTrajectory w = project_to_quotient(traj, deck);
    CHECK(w.wraps[0] == 0);
    CHECK(w.samples[0].x2 == doctest::Approx(0.5));

    CHECK(w.wraps[1] == -1);
    CHECK(w.samples[1].x2 == doctest::Approx(0.5));
    CHECK(w.samples[1].x1 == doctest::Approx(0.5));   // x1 / lambda
    CHECK(w.samples[1].v1 == doctest::Approx(0.5));   // v1 / lambda

    CHECK(w.wraps[2] == -2);
    CHECK(w.samples[2].x2 == doctest::Approx(0.5));
    CHECK(w.samples[2].x1 == doctest::Approx(0.25));

    CHECK(w.wraps[3] == 1);
    CHECK(w.samples[3].x2 == doctest::Approx(0.5));
    CHECK(w.samples[3].x1 == doctest::Approx(2.0));
}

TEST_CASE("deck equivariance of the geodesic flow") {
    NullMetric m = cylinder(2.0);
    GeodesicState s0{1.3, 0.4, 0.7, 0.2, 0.0};
    GeodesicState g0 = apply_deck(*m.deck, s0, 1);
    IntegrationResult a = integrate(m, s0, 2.0);
    IntegrationResult b = integrate(m, g0, 2.0);
    REQUIRE(a.verdict.tag == CompletenessVerdict::Tag::ReachedHorizon);
    REQUIRE(b.verdict.tag == CompletenessVerdict::Tag::ReachedHorizon);
    GeodesicState fa{a.samples.back().x1, a.samples.back().x2, a.samples.back().v1,
                     a.samples.back().v2, a.samples.back().t};
    GeodesicState fae = apply_deck(*m.deck, fa, 1);
    CHECK(std::fabs(fae.x1 - b.samples.back().x1) <= 1e-8 * (1 + std::fabs(fae.x1)));
    CHECK(std::fabs(fae.x2 - b.samples.back().x2) <= 1e-8 * (1 + std::fabs(fae.x2)));
    CHECK(std::fabs(fae.v1 - b.samples.back().v1) <= 1e-8 * (1 + std::fabs(fae.v1)));
    CHECK(std::fabs(fae.v2 - b.samples.back().v2) <= 1e-8 * (1 + std::fabs(fae.v2)));
}
