#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "lorfol/expr.hpp"
#include "lorfol/foliation.hpp"

namespace lorfol {

struct T3Point {
    double p1 = 0.0, p2 = 0.0;  // torus fibre coordinates in [0,1)
    double s = 0.0;             // suspension coordinate in [0,1)
};

/// Suspension flow on T^3_A for a hyperbolic A in GL(2,Z), |det| = 1,
/// moving along the suspension direction at a positive local speed.
class SuspensionFlow {
public:
    /// `speed` is an expression in p1, p2, s; it must be positive.
    /// Non-hyperbolic A (|trace| <= 2) is rejected unless `allow_nonhyperbolic`
    /// is set, which exists to probe the degenerate constant-zero cocycle.
    SuspensionFlow(std::array<std::array<long, 2>, 2> a, Expression speed,
                   bool allow_nonhyperbolic = false, const Bindings& consts = {});

    static SuspensionFlow unit_speed(std::array<std::array<long, 2>, 2> a);

    const std::array<std::array<long, 2>, 2>& matrix() const { return a_; }
    const std::array<std::array<long, 2>, 2>& matrix_inverse() const { return a_inv_; }
    double multiplier() const { return lambda_; }          // eigenvalue with |.| > 1
    double log_multiplier() const { return log_lambda_; }  // ln |lambda|
    std::array<double, 2> unstable_direction() const { return e_u_; }
    std::array<double, 2> stable_direction() const { return e_s_; }
    bool hyperbolic() const { return hyperbolic_; }
    /// Set when the speed has no free names; enables the closed-form flow path.
    const std::optional<double>& constant_speed() const { return const_speed_; }

    double speed_at(const T3Point& x) const;

    struct FlowResult {
        T3Point point;
        double u;      // deformation cocycle u(x, t) = ln|lambda| * fibre progress
        double sigma;  // signed fibre progress (crossings + fractional)
    };

    /// Flows for time t (either sign); crossings of s = 1 apply A to the
    /// fibre coordinate, crossings of s = 0 backwards apply A^{-1}.
    FlowResult flow(const T3Point& x, double t) const;

    /// u(x, t) alone.
    double cocycle_u(const T3Point& x, double t) const;

    /// Least time T > 0 with u(x, T) = target (target > 0), or with
    /// u(x, -T) = -target when searching backwards. Returns nullopt if the
    /// bound t_max is hit first.
    std::optional<double> first_hit_time(const T3Point& x, double target, double t_max,
                                         bool backwards) const;

private:
    std::array<std::array<long, 2>, 2> a_, a_inv_;
    double lambda_ = 1.0, log_lambda_ = 0.0;
    std::array<double, 2> e_u_{1, 0}, e_s_{0, 1};
    Expression speed_;
    Bindings consts_;
    std::optional<double> const_speed_;
    bool hyperbolic_ = false;
};

struct QuasiAnosovWitness {
    T3Point sample;
    std::optional<double> t_expand;    // least t with u >= 1
    std::optional<double> t_contract;  // least |t| with u <= -1
};

struct QuasiAnosovReport {
    bool quasi_anosov = false;
    double T = 0.0;  // max witness time
    double C = 0.0;  // sup of |u| over [0, T] and the sample set
    std::vector<QuasiAnosovWitness> witnesses;
};

QuasiAnosovReport quasi_anosov_probe(const SuspensionFlow& f, const std::vector<T3Point>& samples,
                                     double t_max);

struct EncadrementResult {
    bool holds = false;
    double worst_margin = 0.0;
    double s_at_worst = 0.0;
};

/// Checks min(-C, -C+u(x,t)) <= u(x,s) <= max(C, u(x,t)+C) on sampled s in [0, t].
EncadrementResult encadrement_check(const SuspensionFlow& f, const T3Point& x, double t, double c,
                                    int s_samples);

struct BundleGrid {
    int n1 = 16, n2 = 16, n3 = 16;  // nodes on p1, p2, s in [0,1)
    std::size_t size() const {
        return static_cast<std::size_t>(n1) * static_cast<std::size_t>(n2) *
               static_cast<std::size_t>(n3);
    }
    T3Point node(std::size_t flat) const;
};

enum class BundleSide { Unstable, Stable };

struct HyperbolicityReport {
    double T = 0.0;
    double a = 0.0;                  // inf over grid of u(., T)
    double C = 0.0;                  // sup over [0, T] and grid of |u|
    double contraction_rate = 0.0;   // measured sup-norm rate of the operator
    double invariance_residual = 0.0;  // angle defect of Dphi^T(E) vs E
    int iterations = 0;
};

struct SplittingCandidate {
    BundleGrid grid;
    std::vector<double> f;       // node values of the graph coordinate
    Expression eta_flow_coeff;   // c_X in eta = s_section + c_X * X
    BundleSide side = BundleSide::Unstable;
};

/// Fixed point of the graph-transform contraction
/// A_T(f)(x) = e^{-u(phi^{-T}(x),T)} (f(phi^{-T}(x)) + alpha(phi^{-T}(x),T))
/// on the gridded function space with trilinear interpolation.
struct BundleSolveResult {
    SplittingCandidate candidate;
    HyperbolicityReport report;
};

BundleSolveResult strong_bundle_solve(const SuspensionFlow& f, const Expression& eta_flow_coeff,
                                      double T, const BundleGrid& grid, double tol = 1e-10,
                                      int max_iter = 200, BundleSide side = BundleSide::Unstable,
                                      ExecPolicy policy = ExecPolicy::Parallel);

/// Runs the solver on both sides and measures the Dphi^T-invariance of the
/// recovered line fields.
HyperbolicityReport hyperbolicity_report(const SuspensionFlow& f, double T, const BundleGrid& grid,
                                         double tol = 1e-10,
                                         ExecPolicy policy = ExecPolicy::Parallel);

/// Ambient direction of the candidate bundle at a node (p-plane + flow span).
std::array<double, 3> bundle_direction(const SuspensionFlow& f, const SplittingCandidate& c,
                                       const T3Point& x, double f_value);

}  // namespace lorfol
