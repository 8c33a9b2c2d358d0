#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lorfol/expr.hpp"
#include "lorfol/grid.hpp"

namespace lorfol {

/// Affine deck transformation of the null plane:
/// (x1, x2) -> (s1*x1 + o1, s2*x2 + o2).
struct DeckMap2 {
    double s1 = 1.0, o1 = 0.0;
    double s2 = 1.0, o2 = 0.0;
};

/// Transverse Lorentzian metric e^f dx1 dx2 in null coordinates.
struct NullMetric {
    Expression f;  // over x1, x2 (and named constants)
    std::string x1 = "x1";
    std::string x2 = "x2";
    std::optional<DeckMap2> deck;
    Bindings constants;
};

struct GeodesicState {
    double x1 = 0.0, x2 = 0.0;
    double v1 = 0.0, v2 = 0.0;
    double t = 0.0;
};

struct StateDerivative {
    double dx1, dx2, dv1, dv2;
};

struct IntegratorOptions {
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    double h_init = 1e-3;
    double h_min = 1e-12;      // accepted step below this signals blow-up (with velocity growth)
    double v_blowup = 1e8;     // |v| above this signals blow-up (with step collapse)
    std::size_t max_steps = 2000000;
    std::size_t sample_stride = 1;  // keep every k-th accepted step in the trajectory
};

struct CompletenessVerdict {
    enum class Tag { ReachedHorizon, BlowUp };
    Tag tag = Tag::ReachedHorizon;
    double t_star = 0.0;             // estimated blow-up parameter (BlowUp only)
    double t_star_uncertainty = 0.0;
    std::size_t steps = 0;
    double max_energy_drift = 0.0;   // relative drift of e^f v1 v2
};

struct TrajectoryPoint {
    double t, x1, x2, v1, v2, energy;
};

struct IntegrationResult {
    std::vector<TrajectoryPoint> samples;
    CompletenessVerdict verdict;
};

class NumericFailure : public Error {
public:
    using Error::Error;
};

/// Null-coordinate geodesic equations: x_i'' = -(df/dx_i) (x_i')^2.
StateDerivative geodesic_rhs(const NullMetric& m, const GeodesicState& s);

/// Adaptive Dormand-Prince 5(4) integration up to `horizon`, with blow-up
/// detection (velocity growth plus step-size collapse) and t* extrapolation
/// from a linear fit of 1/|v|.
IntegrationResult integrate(const NullMetric& m, const GeodesicState& s0, double horizon,
                            const IntegratorOptions& opts = {});

/// Max over a 2D grid (axes 0 and 1 of `grid`) of the relative deck-pullback
/// defect |gamma^*(e^f dx1 dx2) - e^f dx1 dx2| / e^f.
double check_deck_invariance(const NullMetric& m, const GridSpec& grid);

struct WrappedTrajectory {
    std::vector<TrajectoryPoint> samples;
    std::vector<long> wraps;  // net deck power applied per sample
};

/// Applies gamma^{+-1} repeatedly so that x2 lands in [base, base + o2).
WrappedTrajectory project_to_quotient(const std::vector<TrajectoryPoint>& traj, const DeckMap2& deck,
                                      double base = 0.0);

GeodesicState apply_deck(const DeckMap2& deck, const GeodesicState& s, long power);

}  // namespace lorfol
