#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lorfol/exterior.hpp"
#include "lorfol/grid.hpp"

namespace lorfol {

/// Candidate defining pair (omega1, omega2) of a codimension-2 foliation.
struct FormPair {
    Form1 omega1;
    Form1 omega2;
    Bindings constants;  // named constants appearing in the coefficients
    /// Closed-form connection candidate, when known (catalog entries carry
    /// one); solve_connection verifies it against the defining equations
    /// instead of trusting it.
    std::optional<Form1> connection_hint;
};

struct VerificationReport {
    double frobenius_residual1 = 0.0;
    double frobenius_residual2 = 0.0;
    double volume_residual = 0.0;
    GridSpec grid;
    std::vector<std::array<double, 3>> rank_drop_points;
};

struct ConnectionForm {
    std::optional<Form1> symbolic;
    std::vector<std::array<double, 3>> values;  // per grid point, NaN at excluded points
    double residual = 0.0;                      // max substitution residual over grid
    std::vector<std::array<double, 3>> rank_drop_points;
};

struct CurvatureField {
    std::vector<double> values;  // per grid point, NaN at excluded points
    std::optional<Expression> closed_form;
    double consistency_residual = 0.0;  // cross-component disagreement
    double min_value = 0.0, max_value = 0.0;
};

enum class TransverseClass { Minkowski, DeSitter, ConstantCurvature, NonConstant };

struct Classification {
    TransverseClass label = TransverseClass::NonConstant;
    double constant_value = 0.0;  // K for ConstantCurvature
    double minkowski_residual = 0.0;
    double desitter_residual = 0.0;
    double spread = 0.0;
    bool ambiguous = false;  // both Minkowski and deSitter within tolerance
};

std::string to_string(TransverseClass c);

enum class ExecPolicy { Serial, Parallel };

/// Max over the grid of |coefficient of d(omega_i) ^ omega_i| for i = 1, 2.
VerificationReport check_frobenius(const FormPair& p, const GridSpec& grid,
                                   ExecPolicy policy = ExecPolicy::Parallel);

/// Max over the grid of the coefficients of L_X(omega1^omega2) with
/// X = kernel_field(omega1, omega2), normalized by |omega1^omega2|.
double check_transverse_volume(const FormPair& p, const GridSpec& grid,
                               ExecPolicy policy = ExecPolicy::Parallel);

/// Pointwise minimum-norm least-squares solve for omega0 in
/// d(omega1) = omega1 ^ omega0, d(omega2) = -omega2 ^ omega0.
/// Points where |omega1^omega2| < 1e-8 are excluded and reported.
std::array<double, 3> solve_connection_at(const FormPair& p, const std::array<double, 3>& pt,
                                          double* residual = nullptr);

ConnectionForm solve_connection(const FormPair& p, const GridSpec& grid, double tol = 1e-6,
                                ExecPolicy policy = ExecPolicy::Parallel);

/// K extracted by componentwise ratio of d(omega0) against omega1^omega2.
CurvatureField curvature(const FormPair& p, const ConnectionForm& conn, const GridSpec& grid,
                         ExecPolicy policy = ExecPolicy::Parallel);

Classification classify(const FormPair& p, const GridSpec& grid, double tol = 1e-6,
                        ExecPolicy policy = ExecPolicy::Parallel);

/// Builds the pair (e^f dx1, dx2), runs the connection/curvature pipeline and
/// returns max |K + (d^2 f/dx1 dx2) e^{-f}| over the grid.
double curvature_crosscheck(const Expression& f, const GridSpec& grid,
                            const Bindings& consts = {},
                            ExecPolicy policy = ExecPolicy::Parallel);

/// The null-coordinate pair (e^{f1} dx1, e^{f2} dx2) on chart (x1, x2, x3).
FormPair null_coordinate_pair(const Expression& f1, const Expression& f2,
                              const Bindings& consts = {});

}  // namespace lorfol
