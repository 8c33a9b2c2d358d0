#include "lorfol/einstein.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lorfol {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kPoleEps = 1e-13;

double reduce_angle(double a) {
    double r = std::fmod(a, kPi);
    if (r < 0.0) r += kPi;
    if (r >= kPi) r = 0.0;
    return r;
}

// Chart value of a projective point: x = tan(theta), or the pole x = infty.
struct Proj {
    double x = 0.0;
    bool pole = false;
};

Proj tan_proj(double theta) {
    if (std::fabs(theta - kPi / 2.0) < kPoleEps) return {0.0, true};
    return {std::tan(theta), false};
}

double angle_of(const Proj& v) {
    if (v.pole) return kPi / 2.0;
    double a = std::atan(v.x);
    return a < 0.0 ? a + kPi : a;
}

Proj scale_proj(const Proj& v, double s) {
    if (v.pole) return v;
    return {v.x * s, false};
}

// Invariant metric coefficient written in chart values (exact through poles):
// (1+x^2)(1+y^2) / (1+x^2 y^2).
double coef_chart(const Proj& x, const Proj& y) {
    if (x.pole && y.pole) return 1.0;
    if (x.pole) {
        if (y.x == 0.0) throw Error("invariant metric undefined at the excluded point p");
        return (1.0 + y.x * y.x) / (y.x * y.x);
    }
    if (y.pole) {
        if (x.x == 0.0) throw Error("invariant metric undefined at the excluded point q");
        return (1.0 + x.x * x.x) / (x.x * x.x);
    }
    return (1.0 + x.x * x.x) * (1.0 + y.x * y.x) / (1.0 + x.x * x.x * y.x * y.x);
}

// d(arctan(s tan theta))/d theta = s (1+x^2) / (1 + s^2 x^2), limit 1/s at the pole.
double dfactor(const Proj& x, double s) {
    if (x.pole) return 1.0 / s;
    return s * (1.0 + x.x * x.x) / (1.0 + s * s * x.x * x.x);
}

bool is_excluded(const EinPoint& p) {
    bool th_pole = std::fabs(p.theta - kPi / 2.0) < kPoleEps;
    bool ph_pole = std::fabs(p.phi - kPi / 2.0) < kPoleEps;
    return (th_pole && std::fabs(p.phi) < kPoleEps) || (ph_pole && std::fabs(p.theta) < kPoleEps);
}

}  // namespace

EinPoint ein_point(double theta, double phi) { return {reduce_angle(theta), reduce_angle(phi)}; }

EinPoint ein_p() { return {kPi / 2.0, 0.0}; }
EinPoint ein_q() { return {0.0, kPi / 2.0}; }

EinPoint embed_psi(double x, double y) { return ein_point(std::atan(x), std::atan(y)); }

std::array<double, 2> unembed(const EinPoint& p) {
    if (std::fabs(p.theta - kPi / 2.0) < kPoleEps || std::fabs(p.phi - kPi / 2.0) < kPoleEps)
        throw Error("unembed undefined on the ideal circle theta = pi/2 or phi = pi/2");
    double x = std::tan(p.theta > kPi / 2.0 ? p.theta - kPi : p.theta);
    double y = std::tan(p.phi > kPi / 2.0 ? p.phi - kPi : p.phi);
    return {x, y};
}

double invariant_metric(const EinPoint& p) {
    if (is_excluded(p)) throw Error("invariant metric undefined at the excluded points p, q");
    return coef_chart(tan_proj(p.theta), tan_proj(p.phi));
}

double pullback_identity_residual(int n, double pole_margin, double h) {
    if (n < 2) throw Error("pullback residual grid needs n >= 2");
    auto dtan = [&](double a) {  // five-point stencil derivative of tan
        return (-std::tan(a + 2 * h) + 8 * std::tan(a + h) - 8 * std::tan(a - h) +
                std::tan(a - 2 * h)) /
               (12 * h);
    };
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        double th = kPi * static_cast<double>(i) / static_cast<double>(n);
        if (std::fabs(th - kPi / 2.0) < pole_margin) continue;
        for (int j = 0; j < n; ++j) {
            double ph = kPi * static_cast<double>(j) / static_cast<double>(n);
            if (std::fabs(ph - kPi / 2.0) < pole_margin) continue;
            double lhs = dtan(th) * dtan(ph);
            double rhs = 1.0 / (std::cos(th) * std::cos(th) * std::cos(ph) * std::cos(ph));
            worst = std::max(worst, std::fabs(lhs - rhs) / rhs);
        }
    }
    return worst;
}

EinPoint fA_apply(const HyperbolicParam& h, long n, const EinPoint& p) {
    if (h.lambda <= 1.0) throw Error("hyperbolic multiplier must exceed 1");
    double s = std::pow(h.lambda, static_cast<double>(n));
    return {angle_of(scale_proj(tan_proj(p.theta), s)),
            angle_of(scale_proj(tan_proj(p.phi), 1.0 / s))};
}

EinPoint orbit(const HyperbolicParam& h, double t, const EinPoint& p) {
    if (h.lambda <= 1.0) throw Error("hyperbolic multiplier must exceed 1");
    double s = std::pow(h.lambda, t);
    return {angle_of(scale_proj(tan_proj(p.theta), s)),
            angle_of(scale_proj(tan_proj(p.phi), 1.0 / s))};
}

double fA_isometry_residual(const HyperbolicParam& h, int n_grid, long n) {
    if (n_grid < 2) throw Error("isometry residual grid needs n >= 2");
    double s = std::pow(h.lambda, static_cast<double>(n));
    double worst = 0.0;
    for (int i = 0; i < n_grid; ++i) {
        double th = kPi * static_cast<double>(i) / static_cast<double>(n_grid);
        Proj x = tan_proj(th);
        for (int j = 0; j < n_grid; ++j) {
            double ph = kPi * static_cast<double>(j) / static_cast<double>(n_grid);
            Proj y = tan_proj(ph);
            if ((x.pole && !y.pole && y.x == 0.0) || (y.pole && !x.pole && x.x == 0.0))
                continue;  // excluded points p, q
            double g = coef_chart(x, y);
            double gp = coef_chart(scale_proj(x, s), scale_proj(y, 1.0 / s));
            double pulled = gp * dfactor(x, s) * dfactor(y, 1.0 / s);
            worst = std::max(worst, std::fabs(pulled - g) / g);
        }
    }
    return worst;
}

DevelopingReport developing_map(const DevelopingSpec& spec, const HyperbolicParam& h,
                                const GridSpec& grid, double fd_step) {
    Expression p1 = spec.p1.simplify();
    Expression p2 = spec.p2.simplify();
    auto eval_d = [&](double x1, double x2, double t) -> EinPoint {
        Bindings b = spec.constants;
        b.values["x1"] = x1;
        b.values["x2"] = x2;
        double a1 = p1.evaluate(b);
        double a2 = p2.evaluate(b);
        return orbit(h, t, ein_point(a1, a2));
    };
    // angle-wrapped central difference of one image coordinate
    auto wrap_diff = [](double plus, double minus) {
        double d = plus - minus;
        d -= kPi * std::round(d / kPi);
        return d;
    };

    DevelopingReport out;
    out.min_sigma2 = std::numeric_limits<double>::infinity();
    const std::size_t total = grid.size();
    for (std::size_t flat = 0; flat < total; ++flat) {
        auto [x1, x2, t] = grid.point(flat);
        EinPoint img = eval_d(x1, x2, t);
        double jac[2][3];
        for (int c = 0; c < 3; ++c) {
            double d[3] = {x1, x2, t};
            d[c] += fd_step;
            EinPoint plus = eval_d(d[0], d[1], d[2]);
            d[c] -= 2 * fd_step;
            EinPoint minus = eval_d(d[0], d[1], d[2]);
            jac[0][c] = wrap_diff(plus.theta, minus.theta) / (2 * fd_step);
            jac[1][c] = wrap_diff(plus.phi, minus.phi) / (2 * fd_step);
        }
        // least singular value via the 2x2 Gram matrix J J^T
        double a = jac[0][0] * jac[0][0] + jac[0][1] * jac[0][1] + jac[0][2] * jac[0][2];
        double b = jac[0][0] * jac[1][0] + jac[0][1] * jac[1][1] + jac[0][2] * jac[1][2];
        double c = jac[1][0] * jac[1][0] + jac[1][1] * jac[1][1] + jac[1][2] * jac[1][2];
        double disc = std::sqrt(std::max(0.0, (a - c) * (a - c) + 4.0 * b * b));
        double eig_min = std::max(0.0, (a + c - disc) / 2.0);
        double sigma2 = std::sqrt(eig_min);
        out.samples.push_back({x1, x2, t, img, sigma2});
        out.min_sigma2 = std::min(out.min_sigma2, sigma2);
        if (sigma2 < 1e-8) out.rank_drop.push_back(flat);
    }
    out.submersion = out.rank_drop.empty();
    return out;
}

EquicontinuityResult equicontinuity_probe(const HyperbolicParam& h, const EinPoint& pt, int n_max) {
    if (n_max < 1) throw Error("equicontinuity probe needs N >= 1");
    if (is_excluded(pt)) throw Error("equicontinuity probe undefined at the excluded points p, q");
    Proj x = tan_proj(pt.theta);
    Proj y = tan_proj(pt.phi);
    auto opnorm = [&](long n) {
        double s = std::pow(h.lambda, static_cast<double>(n));
        return std::max(std::fabs(dfactor(x, s)), std::fabs(dfactor(y, 1.0 / s)));
    };
    EquicontinuityResult out;
    for (long n = -2 * n_max; n <= 2 * n_max; ++n) {
        double v = opnorm(n);
        out.sup_doubled = std::max(out.sup_doubled, v);
        if (std::labs(n) <= n_max && v > out.sup) {
            out.sup = v;
            out.n_at_sup = n;
        }
    }
    out.equicontinuous = std::fabs(out.sup_doubled - out.sup) <= 1e-9;
    return out;
}

}  // namespace lorfol
