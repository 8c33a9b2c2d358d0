#pragma once

#include <array>
#include <vector>

#include "lorfol/expr.hpp"
#include "lorfol/grid.hpp"

namespace lorfol {

/// Point of the Einstein torus Ein_2 = RP^1 x RP^1, each factor an angle
/// in R/piZ; stored reduced to [0, pi)^2.
struct EinPoint {
    double theta = 0.0;
    double phi = 0.0;
};

EinPoint ein_point(double theta, double phi);

/// The two excluded fixed points of the hyperbolic action.
EinPoint ein_p();  // (pi/2, 0)
EinPoint ein_q();  // (0, pi/2)

/// psi: (x, y) -> (arctan x, arctan y), the conformal embedding of the
/// Minkowski plane.
EinPoint embed_psi(double x, double y);

/// Inverse of the embedding; undefined on the ideal circles theta = pi/2
/// or phi = pi/2.
std::array<double, 2> unembed(const EinPoint& p);

struct HyperbolicParam {
    double lambda = 2.0;  // multiplier of the chart action x -> lambda x
};

/// Coefficient of the invariant metric d theta d phi /
/// (cos^2 theta cos^2 phi + sin^2 theta sin^2 phi).
double invariant_metric(const EinPoint& p);

/// Max over an n x n angle grid (points within `pole_margin` of either pole
/// skipped) of the relative defect of
/// (psi^{-1})^* dx dy = d theta d phi / (cos^2 theta cos^2 phi),
/// with the Jacobian computed by a five-point stencil.
double pullback_identity_residual(int n, double pole_margin = 0.1, double h = 1e-4);

/// n-th power of f_A: chart action (x, y) -> (lambda^n x, lambda^{-n} y)
/// extended through the poles (theta = pi/2 is fixed in the first factor).
EinPoint fA_apply(const HyperbolicParam& h, long n, const EinPoint& p);

/// One-parameter orbit exp(ta) x exp(-ta): (x, y) -> (lambda^t x, lambda^{-t} y).
EinPoint orbit(const HyperbolicParam& h, double t, const EinPoint& p);

/// Max over an n x n grid (excluded points p, q skipped) of the relative
/// pullback defect of the invariant metric under f_A^n, using the closed-form
/// derivative factors.
double fA_isometry_residual(const HyperbolicParam& h, int n_grid, long n = 1);

/// Transverse data of the developing map
/// D(x1, x2, t) = (exp(ta)(P1(x1, x2)), exp(-ta)(P2(x1, x2))),
/// with P1, P2 expressions in x1, x2 valued in angle coordinates.
struct DevelopingSpec {
    Expression p1, p2;
    Bindings constants;
};

struct DevelopingSample {
    double x1, x2, t;
    EinPoint image;
    double sigma2;  // least singular value of the 2x3 Jacobian
};

struct DevelopingReport {
    std::vector<DevelopingSample> samples;
    double min_sigma2 = 0.0;
    std::vector<std::size_t> rank_drop;  // indices with sigma2 < 1e-8
    bool submersion = false;
};

/// Evaluates D over the grid (axes: x1, x2, t) and measures submersivity via
/// the numeric Jacobian (central differences, angle-wrapped).
DevelopingReport developing_map(const DevelopingSpec& spec, const HyperbolicParam& h,
                                const GridSpec& grid, double fd_step = 1e-6);

struct EquicontinuityResult {
    double sup = 0.0;        // sup over |n| <= N of the operator norm of d(f_A^n)
    long n_at_sup = 0;
    double sup_doubled = 0.0;  // same over |n| <= 2N
    bool equicontinuous = false;
};

/// Derivative-growth probe at a point (error at p and q).
EquicontinuityResult equicontinuity_probe(const HyperbolicParam& h, const EinPoint& pt, int n_max);

}  // namespace lorfol
