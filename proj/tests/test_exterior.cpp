#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <random>

#include "lorfol/exterior.hpp"
#include "lorfol/grid.hpp"

using namespace lorfol;

namespace {

Expression E(const char* s) { return parse_expression(s); }
const Expression kZero = Expression::constant(0);
const Expression kOne = Expression::constant(1);

Chart xyz() { return Chart::lines("x", "y", "z"); }

Form1 nonflat_omega1() {
    return {xyz(), {E("cos(y)"), E("lambda^(y/(2*pi))*sin(y)"), kZero}};
}
Form1 nonflat_omega2() {
    return {xyz(), {E("sin(y)"), E("-(lambda^(y/(2*pi))*cos(y))"), kZero}};
}

Bindings at(double x, double y, double z, double lambda = 2.0) {
    return Bindings{{"x", x}, {"y", y}, {"z", z}, {"lambda", lambda}};
}

// Random smooth expression over x, y, z (polynomial/trig, bounded).
Expression random_expr3(std::mt19937& rng, int depth) {
    std::uniform_real_distribution<double> uc(-1.5, 1.5);
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 5);
    const char* vars[3] = {"x", "y", "z"};
    switch (pick(rng)) {
        case 0: return Expression::constant(uc(rng));
        case 1: return Expression::name(vars[rng() % 3]);
        case 2: return random_expr3(rng, depth - 1) + random_expr3(rng, depth - 1);
        case 3: return random_expr3(rng, depth - 1) * random_expr3(rng, depth - 1);
        case 4: return sin(random_expr3(rng, depth - 1));
        default: return cos(random_expr3(rng, depth - 1));
    }
}

// Value of a 2-form on a pair of tangent vectors.
double two_form_on(const std::array<double, 3>& c, const std::array<double, 3>& u,
                   const std::array<double, 3>& v) {
    return c[0] * (u[0] * v[1] - u[1] * v[0]) + c[1] * (u[0] * v[2] - u[2] * v[0]) +
           c[2] * (u[1] * v[2] - u[2] * v[1]);
}

}  // namespace

TEST_CASE("wedge11 basis and antisymmetry") {
    Form1 dx{xyz(), {kOne, kZero, kZero}};
    Form1 dy{xyz(), {kZero, kOne, kZero}};
    Form2 w = wedge11(dx, dy);
    Bindings b = at(0.3, -1.0, 2.0);
    auto v = evaluate(w, b);
    CHECK(v[0] == doctest::Approx(1.0));
    CHECK(v[1] == doctest::Approx(0.0));
    CHECK(v[2] == doctest::Approx(0.0));

    std::mt19937 rng(3);
    for (int i = 0; i < 20; ++i) {
        Form1 a{xyz(), {random_expr3(rng, 3), random_expr3(rng, 3), random_expr3(rng, 3)}};
        Form1 c{xyz(), {random_expr3(rng, 3), random_expr3(rng, 3), random_expr3(rng, 3)}};
        Bindings p = at(0.4, 0.9, -0.2);
        auto ab = evaluate(wedge11(a, c), p);
        auto ba = evaluate(wedge11(c, a), p);
        auto aa = evaluate(wedge11(a, a), p);
        for (int k = 0; k < 3; ++k) {
            CHECK(ab[k] == doctest::Approx(-ba[k]).epsilon(1e-12));
            CHECK(aa[k] == doctest::Approx(0.0));
        }
    }
}

TEST_CASE("nonflat pair wedge: omega1 ^ omega2 = -lambda^{y/2pi} dx^dy") {
    Form2 w = wedge11(nonflat_omega1(), nonflat_omega2());
    for (int i = 0; i < 10; ++i) {
        for (int j = 0; j < 10; ++j) {
            double x = -1.0 + 0.2 * i, y = 0.6 * j;
            Bindings b = at(x, y, 0.0);
            auto v = evaluate(w, b);
            CHECK(v[0] == doctest::Approx(-std::pow(2.0, y / (2 * M_PI))).epsilon(1e-12));
            CHECK(v[1] == doctest::Approx(0.0));
            CHECK(v[2] == doctest::Approx(0.0));
        }
    }
}

TEST_CASE("wedge12 orientation and the contact form") {
    Form1 dz{xyz(), {kZero, kZero, kOne}};
    Form2 dxdy{xyz(), {kOne, kZero, kZero}};
    CHECK(evaluate(wedge12(dz, dxdy), at(1, 2, 3)) == doctest::Approx(1.0));

    Form1 contact{xyz(), {kZero, Expression::name("x"), kOne}};  // dz + x dy
    Form3 vol = wedge12(contact, d1(contact));
    CHECK(evaluate(vol, at(0.7, -0.3, 1.1)) == doctest::Approx(1.0));
}

TEST_CASE("exterior derivative of the flat and nonflat forms") {
    Form1 w1{xyz(), {E("cos(x)"), kZero, E("sin(x)")}};
    Form2 dw1 = d1(w1);
    for (double x : {0.0, 0.8, 2.0}) {
        auto v = evaluate(dw1, at(x, 0.5, 0.1));
        CHECK(v[0] == doctest::Approx(0.0));
        CHECK(v[1] == doctest::Approx(std::cos(x)).epsilon(1e-12));  // cos x dx^dz
        CHECK(v[2] == doctest::Approx(0.0));
    }
    // omega1 ^ d omega1 = 0 identically for the flat form
    Form3 fr = wedge12(w1, dw1);
    CHECK(evaluate(fr, at(0.3, 1.0, -2.0)) == doctest::Approx(0.0));

    Form1 dx{xyz(), {kOne, kZero, kZero}};
    auto v0 = evaluate(d1(dx), at(1, 1, 1));
    CHECK((v0[0] == 0.0 && v0[1] == 0.0 && v0[2] == 0.0));

    Form2 dnf = d1(nonflat_omega1());
    for (double y : {0.0, 1.1, 4.0}) {
        auto v = evaluate(dnf, at(0.2, y, 0.0));
        CHECK(v[0] == doctest::Approx(std::sin(y)).epsilon(1e-12));  // sin y dx^dy
        CHECK(v[1] == doctest::Approx(0.0));
        CHECK(v[2] == doctest::Approx(0.0));
    }
}

TEST_CASE("d2 basis case and d∘d = 0") {
    Form2 xdydz{xyz(), {kZero, kZero, Expression::name("x")}};
    CHECK(evaluate(d2(xdydz), at(5, 6, 7)) == doctest::Approx(1.0));

    GridSpec g = GridSpec::cube(-1.0, 1.0, 5);
    auto check_dd = [&](const Form1& f) {
        Form3 dd = d2(d1(f));
        for (std::size_t i = 0; i < g.size(); ++i) {
            Bindings b = bind_point(f.chart, g.point(i), {{"lambda", 2.0}});
            CHECK(std::fabs(evaluate(dd, b)) <= 1e-9);
        }
    };
    check_dd(nonflat_omega1());
    check_dd(nonflat_omega2());
    check_dd(Form1{xyz(), {E("cos(x)"), kZero, E("sin(x)")}});
    check_dd(Form1{xyz(), {kZero, E("cos(y)"), E("-sin(y)")}});
    std::mt19937 rng(11);
    for (int i = 0; i < 20; ++i)
        check_dd(Form1{xyz(), {random_expr3(rng, 3), random_expr3(rng, 3), random_expr3(rng, 3)}});
}

TEST_CASE("interior products against the bilinear definition") {
    VectorField dz_field{xyz(), {kZero, kZero, kOne}};
    Form2 dxdy{xyz(), {kOne, kZero, kZero}};
    auto v = evaluate(interior2(dz_field, dxdy), at(1, 2, 3));
    CHECK((v[0] == 0.0 && v[1] == 0.0 && v[2] == 0.0));

    Form2 dxdz{xyz(), {kZero, kOne, kZero}};
    v = evaluate(interior2(dz_field, dxdz), at(1, 2, 3));
    CHECK(v[0] == doctest::Approx(-1.0));  // i_dz(dx^dz) = -dx
    CHECK(v[1] == doctest::Approx(0.0));
    CHECK(v[2] == doctest::Approx(0.0));

    Form2 w12 = wedge11(nonflat_omega1(), nonflat_omega2());
    v = evaluate(interior2(dz_field, w12), at(0.5, 1.7, 0.0));
    CHECK((std::fabs(v[0]) < 1e-12 && std::fabs(v[1]) < 1e-12 && std::fabs(v[2]) < 1e-12));

    // i_X a against a(X) for random data
    std::mt19937 rng(5);
    for (int i = 0; i < 10; ++i) {
        Form2 a{xyz(), {random_expr3(rng, 3), random_expr3(rng, 3), random_expr3(rng, 3)}};
        VectorField x{xyz(), {random_expr3(rng, 2), random_expr3(rng, 2), random_expr3(rng, 2)}};
        Bindings b = at(0.2, -0.6, 0.9);
        auto xa = evaluate(x, b);
        auto ca = evaluate(a, b);
        auto ia = evaluate(interior2(x, a), b);
        // (i_X a)(u) = a(X, u) for the basis vectors u
        std::array<double, 3> e1{1, 0, 0}, e2{0, 1, 0}, e3{0, 0, 1};
        CHECK(ia[0] == doctest::Approx(two_form_on(ca, xa, e1)).epsilon(1e-10));
        CHECK(ia[1] == doctest::Approx(two_form_on(ca, xa, e2)).epsilon(1e-10));
        CHECK(ia[2] == doctest::Approx(two_form_on(ca, xa, e3)).epsilon(1e-10));
    }
}

TEST_CASE("Lie derivative basics and the volume invariance identity") {
    VectorField dz_field{xyz(), {kZero, kZero, kOne}};
    Form2 dxdy{xyz(), {kOne, kZero, kZero}};
    auto v = evaluate(lie2(dz_field, dxdy), at(1, 1, 1));
    CHECK((std::fabs(v[0]) < 1e-12 && std::fabs(v[1]) < 1e-12 && std::fabs(v[2]) < 1e-12));

    Form2 w12 = wedge11(nonflat_omega1(), nonflat_omega2());
    Form2 lw = lie2(dz_field, w12);
    for (double y : {0.0, 0.9, 3.1}) {
        auto lv = evaluate(lw, at(0.4, y, 0.2));
        for (int k = 0; k < 3; ++k) CHECK(std::fabs(lv[k]) < 1e-12);
    }

    VectorField dx_field{xyz(), {kOne, kZero, kZero}};
    Form2 xdxdy{xyz(), {Expression::name("x"), kZero, kZero}};
    auto lx = evaluate(lie2(dx_field, xdxdy), at(0.3, 0.4, 0.5));
    CHECK(lx[0] == doctest::Approx(1.0));
    CHECK(lx[1] == doctest::Approx(0.0));
    CHECK(lx[2] == doctest::Approx(0.0));
}

TEST_CASE("Cartan formula agrees with the flow-pullback Lie derivative") {
    std::mt19937 rng(17);
    for (int trial = 0; trial < 6; ++trial) {
        VectorField x{xyz(), {random_expr3(rng, 2), random_expr3(rng, 2), random_expr3(rng, 2)}};
        Form2 a{xyz(), {random_expr3(rng, 3), random_expr3(rng, 3), random_expr3(rng, 3)}};
        Form2 la = lie2(x, a);

        std::array<double, 3> p{0.25, -0.4, 0.6};
        auto xv = [&](const std::array<double, 3>& q) {
            return evaluate(x, at(q[0], q[1], q[2]));
        };
        // one RK4 step of the flow of X
        auto flow = [&](std::array<double, 3> q, double t) {
            auto k1 = xv(q);
            std::array<double, 3> q2, q3, q4;
            for (int k = 0; k < 3; ++k) q2[k] = q[k] + 0.5 * t * k1[k];
            auto k2 = xv(q2);
            for (int k = 0; k < 3; ++k) q3[k] = q[k] + 0.5 * t * k2[k];
            auto k3 = xv(q3);
            for (int k = 0; k < 3; ++k) q4[k] = q[k] + t * k3[k];
            auto k4 = xv(q4);
            for (int k = 0; k < 3; ++k)
                q[k] += t / 6.0 * (k1[k] + 2 * k2[k] + 2 * k3[k] + k4[k]);
            return q;
        };
        // pullback (phi_t^* a)(u, v) at p via the numeric Jacobian of phi_t
        auto pulled = [&](double t, const std::array<double, 3>& u, const std::array<double, 3>& v) {
            double jh = 1e-5;
            double jac[3][3];
            for (int c = 0; c < 3; ++c) {
                std::array<double, 3> pp = p, pm = p;
                pp[c] += jh;
                pm[c] -= jh;
                auto fp = flow(pp, t);
                auto fm = flow(pm, t);
                for (int r = 0; r < 3; ++r) jac[r][c] = (fp[r] - fm[r]) / (2 * jh);
            }
            auto q = flow(p, t);
            auto ca = evaluate(a, at(q[0], q[1], q[2]));
            std::array<double, 3> ju{}, jv{};
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) {
                    ju[r] += jac[r][c] * u[c];
                    jv[r] += jac[r][c] * v[c];
                }
            return two_form_on(ca, ju, jv);
        };

        std::array<double, 3> u{1, 0.3, -0.2}, v{-0.5, 1, 0.4};
        double h = 1e-4;
        double fd = (pulled(h, u, v) - pulled(-h, u, v)) / (2 * h);
        auto lc = evaluate(la, at(p[0], p[1], p[2]));
        CHECK(std::fabs(two_form_on(lc, u, v) - fd) < 1e-5);
    }
}

TEST_CASE("kernel field of the catalog pairs") {
    Form1 dx{xyz(), {kOne, kZero, kZero}};
    Form1 dy{xyz(), {kZero, kOne, kZero}};
    auto v = evaluate(kernel_field(dx, dy), at(1, 2, 3));
    CHECK((v[0] == 0.0 && v[1] == 0.0));
    CHECK(v[2] == doctest::Approx(1.0));

    Form1 w1{xyz(), {E("cos(x)"), kZero, E("sin(x)")}};
    Form1 w2{xyz(), {kZero, E("cos(y)"), E("-sin(y)")}};
    VectorField k = kernel_field(w1, w2);
    for (double x : {0.0, 0.7}) {
        for (double y : {0.3, 2.2}) {
            Bindings b = at(x, y, 0.0);
            auto kv = evaluate(k, b);
            CHECK(kv[0] == doctest::Approx(-std::sin(x) * std::cos(y)).epsilon(1e-12));
            CHECK(kv[1] == doctest::Approx(std::cos(x) * std::sin(y)).epsilon(1e-12));
            CHECK(kv[2] == doctest::Approx(std::cos(x) * std::cos(y)).epsilon(1e-12));
            // contraction vanishes against both forms
            auto a1 = evaluate(w1, b);
            auto a2 = evaluate(w2, b);
            CHECK(std::fabs(a1[0] * kv[0] + a1[1] * kv[1] + a1[2] * kv[2]) <= 1e-12);
            CHECK(std::fabs(a2[0] * kv[0] + a2[1] * kv[1] + a2[2] * kv[2]) <= 1e-12);
        }
    }

    // the nonflat pair's kernel is a multiple of dz
    VectorField k2 = kernel_field(nonflat_omega1(), nonflat_omega2());
    auto kv2 = evaluate(k2, at(0.5, 1.0, 0.0));
    CHECK(std::fabs(kv2[0]) < 1e-12);
    CHECK(std::fabs(kv2[1]) < 1e-12);
    CHECK(std::fabs(kv2[2]) > 1e-6);
}

TEST_CASE("chart mismatch is rejected") {
    Form1 a{xyz(), {kOne, kZero, kZero}};
    Form1 b{Chart::lines("u", "v", "w"), {kOne, kZero, kZero}};
    CHECK_THROWS_AS(wedge11(a, b), ChartMismatch);
}
