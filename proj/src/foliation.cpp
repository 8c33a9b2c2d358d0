#include "lorfol/foliation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lorfol {

namespace {

constexpr double kRankDropThreshold = 1e-8;  // on |omega1^omega2|

double norm3(const std::array<double, 3>& v) {
    return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
}

// Minimum-norm solution of the symmetric 3x3 system M w = r via a Jacobi
// eigendecomposition; eigenvalues below rel_cut * max |eigenvalue| are
// treated as a null direction.
std::array<double, 3> solve_sym3_minnorm(std::array<std::array<double, 3>, 3> m,
                                         std::array<double, 3> r, double rel_cut = 1e-10) {
    std::array<std::array<double, 3>, 3> v = {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    for (int sweep = 0; sweep < 32; ++sweep) {
        double off = std::fabs(m[0][1]) + std::fabs(m[0][2]) + std::fabs(m[1][2]);
        if (off == 0.0) break;
        for (int p = 0; p < 2; ++p) {
            for (int q = p + 1; q < 3; ++q) {
                if (m[p][q] == 0.0) continue;
                double theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (int k = 0; k < 3; ++k) {
                    double mkp = m[k][p], mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for (int k = 0; k < 3; ++k) {
                    double mpk = m[p][k], mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for (int k = 0; k < 3; ++k) {
                    double vkp = v[k][p], vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    double max_eig = std::max({std::fabs(m[0][0]), std::fabs(m[1][1]), std::fabs(m[2][2])});
    std::array<double, 3> w{0, 0, 0};
    if (max_eig == 0.0) return w;
    for (int j = 0; j < 3; ++j) {
        double eig = m[j][j];
        if (std::fabs(eig) < rel_cut * max_eig) continue;
        double proj = v[0][j] * r[0] + v[1][j] * r[1] + v[2][j] * r[2];
        double coef = proj / eig;
        for (int k = 0; k < 3; ++k) w[static_cast<std::size_t>(k)] += coef * v[k][j];
    }
    return w;
}

struct PairEval {
    std::array<double, 3> w1, w2;    // omega1, omega2 coefficients
    std::array<double, 3> dw1, dw2;  // d(omega_i) in the 2-form basis
    std::array<double, 3> vol;       // omega1 ^ omega2
};

struct PairSymbols {
    Form2 d_omega1, d_omega2, volume;
    PairSymbols(const FormPair& p)
        : d_omega1(d1(p.omega1)), d_omega2(d1(p.omega2)), volume(wedge11(p.omega1, p.omega2)) {}
};

PairEval eval_pair(const FormPair& p, const PairSymbols& sym, const std::array<double, 3>& pt) {
    Bindings b = bind_point(p.omega1.chart, pt, p.constants);
    return PairEval{evaluate(p.omega1, b), evaluate(p.omega2, b), evaluate(sym.d_omega1, b),
                    evaluate(sym.d_omega2, b), evaluate(sym.volume, b)};
}

// Rows of the linear map w -> coefficients of a ^ w in the 2-form basis.
void wedge_rows(const std::array<double, 3>& a, double rows[3][3]) {
    rows[0][0] = -a[1]; rows[0][1] = a[0];  rows[0][2] = 0.0;
    rows[1][0] = -a[2]; rows[1][1] = 0.0;   rows[1][2] = a[0];
    rows[2][0] = 0.0;   rows[2][1] = -a[2]; rows[2][2] = a[1];
}

// Least-squares solve of {omega1 ^ w = dw1, omega2 ^ w = -dw2} at one point.
std::array<double, 3> connection_ls(const PairEval& e, double* residual) {
    double rows[6][3];
    double rhs[6];
    wedge_rows(e.w1, rows);
    wedge_rows(e.w2, rows + 3);
    for (int k = 0; k < 3; ++k) {
        rhs[k] = e.dw1[static_cast<std::size_t>(k)];
        rhs[3 + k] = -e.dw2[static_cast<std::size_t>(k)];
    }
    std::array<std::array<double, 3>, 3> m{};
    std::array<double, 3> r{};
    for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 3; ++j) {
            r[static_cast<std::size_t>(j)] += rows[i][j] * rhs[i];
            for (int k = 0; k < 3; ++k) m[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] += rows[i][j] * rows[i][k];
        }
    }
    std::array<double, 3> w = solve_sym3_minnorm(m, r);
    if (residual) {
        double res = 0.0;
        for (int i = 0; i < 6; ++i) {
            double ax = rows[i][0] * w[0] + rows[i][1] * w[1] + rows[i][2] * w[2];
            res = std::max(res, std::fabs(ax - rhs[i]));
        }
        *residual = res;
    }
    return w;
}

template <typename F>
void grid_for_each(const GridSpec& grid, ExecPolicy policy, F&& body) {
    const auto n = static_cast<std::ptrdiff_t>(grid.size());
    if (policy == ExecPolicy::Parallel) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < n; ++i) body(static_cast<std::size_t>(i));
    } else {
        for (std::ptrdiff_t i = 0; i < n; ++i) body(static_cast<std::size_t>(i));
    }
}

// Substitution residual of a symbolic omega0 candidate at one point.
double candidate_residual(const PairEval& e, const std::array<double, 3>& w0) {
    double rows[6][3];
    double rhs[6];
    wedge_rows(e.w1, rows);
    wedge_rows(e.w2, rows + 3);
    for (int k = 0; k < 3; ++k) {
        rhs[k] = e.dw1[static_cast<std::size_t>(k)];
        rhs[3 + k] = -e.dw2[static_cast<std::size_t>(k)];
    }
    double res = 0.0;
    for (int i = 0; i < 6; ++i) {
        double ax = rows[i][0] * w0[0] + rows[i][1] * w0[1] + rows[i][2] * w0[2];
        res = std::max(res, std::fabs(ax - rhs[i]));
    }
    return res;
}

// Detects the null-coordinate structure (g1 dc1, g2 dc2) and returns the
// closed-form connection (d1 g2 / g2) dc1 - (d2 g1 / g1) dc2.
std::optional<Form1> null_coordinate_connection(const FormPair& p) {
    const Form1 o1 = simplify(p.omega1);
    const Form1 o2 = simplify(p.omega2);
    if (!o1.c[1].is_constant_zero() || !o1.c[2].is_constant_zero()) return std::nullopt;
    if (!o2.c[0].is_constant_zero() || !o2.c[2].is_constant_zero()) return std::nullopt;
    const Chart& ch = p.omega1.chart;
    Expression g1 = o1.c[0];
    Expression g2 = o2.c[1];
    Expression a = (g2.differentiate(ch.name(0)) / g2).simplify();
    Expression b = (Expression() - g1.differentiate(ch.name(1)) / g1).simplify();
    return Form1{ch, {a, b, Expression()}};
}

struct DOmega0Field {
    // d(omega0) per grid point in the 2-form basis, NaN triple where excluded
    std::vector<std::array<double, 3>> values;
    std::vector<bool> excluded;
};

// d(omega0) over the grid: exact when a symbolic connection is available,
// otherwise central finite differences of the pointwise solve (h = 1e-5).
DOmega0Field d_omega0_field(const FormPair& p, const ConnectionForm& conn, const GridSpec& grid,
                            ExecPolicy policy) {
    DOmega0Field out;
    out.values.assign(grid.size(), {0, 0, 0});
    out.excluded.assign(grid.size(), false);
    const PairSymbols sym(p);
    if (conn.symbolic) {
        const Form2 dw0 = d1(*conn.symbolic);
        grid_for_each(grid, policy, [&](std::size_t i) {
            auto pt = grid.point(i);
            PairEval e = eval_pair(p, sym, pt);
            if (norm3(e.vol) < kRankDropThreshold) {
                out.excluded[i] = true;
                return;
            }
            Bindings b = bind_point(p.omega1.chart, pt, p.constants);
            out.values[i] = evaluate(dw0, b);
        });
        return out;
    }
    grid_for_each(grid, policy, [&](std::size_t i) {
        auto pt = grid.point(i);
        PairEval e = eval_pair(p, sym, pt);
        if (norm3(e.vol) < kRankDropThreshold) {
            out.excluded[i] = true;
            return;
        }
        // partials of the solved omega0 components by central differences
        double dw[3][3];  // dw[i][j] = d_i w_j
        for (int axis = 0; axis < 3; ++axis) {
            double h = 1e-5 * (1.0 + std::fabs(pt[static_cast<std::size_t>(axis)]));
            auto plus = pt, minus = pt;
            plus[static_cast<std::size_t>(axis)] += h;
            minus[static_cast<std::size_t>(axis)] -= h;
            auto wp = connection_ls(eval_pair(p, sym, plus), nullptr);
            auto wm = connection_ls(eval_pair(p, sym, minus), nullptr);
            for (int j = 0; j < 3; ++j)
                dw[axis][j] = (wp[static_cast<std::size_t>(j)] - wm[static_cast<std::size_t>(j)]) / (2.0 * h);
        }
        out.values[i] = {dw[0][1] - dw[1][0], dw[0][2] - dw[2][0], dw[1][2] - dw[2][1]};
    });
    return out;
}

}  // namespace

std::string to_string(TransverseClass c) {
    switch (c) {
        case TransverseClass::Minkowski: return "Minkowski";
        case TransverseClass::DeSitter: return "deSitter";
        case TransverseClass::ConstantCurvature: return "constant";
        case TransverseClass::NonConstant: return "nonconstant";
    }
    return "?";
}

VerificationReport check_frobenius(const FormPair& p, const GridSpec& grid, ExecPolicy policy) {
    if (grid.size() == 0) throw Error("empty verification grid");
    VerificationReport rep;
    rep.grid = grid;
    const Form3 r1 = wedge12(p.omega1, d1(p.omega1));
    const Form3 r2 = wedge12(p.omega2, d1(p.omega2));
    const PairSymbols sym(p);
    std::vector<double> v1(grid.size()), v2(grid.size());
    std::vector<bool> drop(grid.size(), false);
    grid_for_each(grid, policy, [&](std::size_t i) {
        auto pt = grid.point(i);
        Bindings b = bind_point(p.omega1.chart, pt, p.constants);
        v1[i] = std::fabs(r1.c.evaluate(b));
        v2[i] = std::fabs(r2.c.evaluate(b));
        drop[i] = norm3(evaluate(sym.volume, b)) < kRankDropThreshold;
    });
    for (std::size_t i = 0; i < grid.size(); ++i) {
        rep.frobenius_residual1 = std::max(rep.frobenius_residual1, v1[i]);
        rep.frobenius_residual2 = std::max(rep.frobenius_residual2, v2[i]);
        if (drop[i] && rep.rank_drop_points.size() < 16) rep.rank_drop_points.push_back(grid.point(i));
    }
    return rep;
}

double check_transverse_volume(const FormPair& p, const GridSpec& grid, ExecPolicy policy) {
    const VectorField x = kernel_field(p.omega1, p.omega2);
    const Form2 vol = wedge11(p.omega1, p.omega2);
    const Form2 lie = lie2(x, vol);
    std::vector<double> res(grid.size(), 0.0);
    std::vector<bool> nonzero(grid.size(), false);
    grid_for_each(grid, policy, [&](std::size_t i) {
        Bindings b = bind_point(p.omega1.chart, grid.point(i), p.constants);
        auto v = evaluate(vol, b);
        double vn = norm3(v);
        if (vn < kRankDropThreshold) return;
        nonzero[i] = true;
        auto l = evaluate(lie, b);
        res[i] = norm3(l) / vn;
    });
    bool any = false;
    double out = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        any = any || nonzero[i];
        out = std::max(out, res[i]);
    }
    if (!any) throw Error("degenerate pair: omega1^omega2 vanishes on the whole grid");
    return out;
}

std::array<double, 3> solve_connection_at(const FormPair& p, const std::array<double, 3>& pt,
                                          double* residual) {
    const PairSymbols sym(p);
    PairEval e = eval_pair(p, sym, pt);
    if (norm3(e.vol) < kRankDropThreshold)
        throw Error("rank-deficient point: |omega1^omega2| below threshold");
    return connection_ls(e, residual);
}

ConnectionForm solve_connection(const FormPair& p, const GridSpec& grid, double tol,
                                ExecPolicy policy) {
    ConnectionForm out;
    out.values.assign(grid.size(), {0, 0, 0});
    const PairSymbols sym(p);

    std::optional<Form1> symbolic = p.connection_hint;
    if (!symbolic) symbolic = null_coordinate_connection(p);

    std::vector<double> res(grid.size(), 0.0);
    std::vector<bool> drop(grid.size(), false);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    bool use_symbolic = symbolic.has_value();
    if (use_symbolic) {
        grid_for_each(grid, policy, [&](std::size_t i) {
            auto pt = grid.point(i);
            PairEval e = eval_pair(p, sym, pt);
            if (norm3(e.vol) < kRankDropThreshold) {
                drop[i] = true;
                return;
            }
            Bindings b = bind_point(p.omega1.chart, pt, p.constants);
            auto w0 = evaluate(*symbolic, b);
            out.values[i] = w0;
            res[i] = candidate_residual(e, w0);
        });
        double max_res = 0.0;
        for (double r : res) max_res = std::max(max_res, r);
        if (max_res <= tol) {
            out.symbolic = simplify(*symbolic);
            out.residual = max_res;
            for (std::size_t i = 0; i < grid.size(); ++i) {
                if (drop[i]) {
                    out.values[i] = {nan, nan, nan};
                    if (out.rank_drop_points.size() < 16) out.rank_drop_points.push_back(grid.point(i));
                }
            }
            return out;
        }
        // candidate failed verification; fall through to the numeric solve
        out.rank_drop_points.clear();
        std::fill(res.begin(), res.end(), 0.0);
        std::fill(drop.begin(), drop.end(), false);
    }

    grid_for_each(grid, policy, [&](std::size_t i) {
        auto pt = grid.point(i);
        PairEval e = eval_pair(p, sym, pt);
        if (norm3(e.vol) < kRankDropThreshold) {
            drop[i] = true;
            out.values[i] = {nan, nan, nan};
            return;
        }
        out.values[i] = connection_ls(e, &res[i]);
    });
    bool all_drop = true;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        out.residual = std::max(out.residual, res[i]);
        if (drop[i]) {
            if (out.rank_drop_points.size() < 16) out.rank_drop_points.push_back(grid.point(i));
        } else {
            all_drop = false;
        }
    }
    if (all_drop) throw Error("rank-deficient pair: no grid point has rank 2");
    if (out.residual > tol)
        throw Error("connection residual " + std::to_string(out.residual) +
                    " exceeds tolerance; pair is not transversely Lorentzian on this grid");
    return out;
}

CurvatureField curvature(const FormPair& p, const ConnectionForm& conn, const GridSpec& grid,
                         ExecPolicy policy) {
    CurvatureField out;
    out.values.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());
    const PairSymbols sym(p);
    DOmega0Field dw0 = d_omega0_field(p, conn, grid, policy);

    if (conn.symbolic) {
        // closed-form K from the dominant component of the symbolic ratio
        // is still reported per point below; keep the symbolic d(omega0)
        // as the closed form divided by the volume when both are symbolic.
        const Form2 dsym = d1(*conn.symbolic);
        const Form2 vol = wedge11(p.omega1, p.omega2);
        for (int k = 0; k < 3; ++k) {
            if (!dsym.c[static_cast<std::size_t>(k)].simplify().is_constant_zero()) {
                out.closed_form =
                    (dsym.c[static_cast<std::size_t>(k)] / vol.c[static_cast<std::size_t>(k)]).simplify();
                break;
            }
        }
        if (!out.closed_form) out.closed_form = Expression();  // d(omega0) = 0: K = 0
    }

    std::vector<double> consistency(grid.size(), 0.0);
    grid_for_each(grid, policy, [&](std::size_t i) {
        if (dw0.excluded[i]) return;
        auto pt = grid.point(i);
        PairEval e = eval_pair(p, sym, pt);
        int dominant = 0;
        for (int k = 1; k < 3; ++k)
            if (std::fabs(e.vol[static_cast<std::size_t>(k)]) > std::fabs(e.vol[static_cast<std::size_t>(dominant)])) dominant = k;
        if (std::fabs(e.vol[static_cast<std::size_t>(dominant)]) < kRankDropThreshold) return;
        double k_val = dw0.values[i][static_cast<std::size_t>(dominant)] / e.vol[static_cast<std::size_t>(dominant)];
        out.values[i] = k_val;
        double c = 0.0;
        for (int k = 0; k < 3; ++k)
            c = std::max(c, std::fabs(dw0.values[i][static_cast<std::size_t>(k)] - k_val * e.vol[static_cast<std::size_t>(k)]));
        consistency[i] = c / std::max(1.0, norm3(e.vol));
    });
    out.min_value = std::numeric_limits<double>::infinity();
    out.max_value = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        out.consistency_residual = std::max(out.consistency_residual, consistency[i]);
        if (!std::isnan(out.values[i])) {
            any = true;
            out.min_value = std::min(out.min_value, out.values[i]);
            out.max_value = std::max(out.max_value, out.values[i]);
        }
    }
    if (!any) throw Error("curvature: omega1^omega2 below threshold at every grid point");
    return out;
}

Classification classify(const FormPair& p, const GridSpec& grid, double tol, ExecPolicy policy) {
    ConnectionForm conn = solve_connection(p, grid, std::max(tol, 1e-6), policy);
    DOmega0Field dw0 = d_omega0_field(p, conn, grid, policy);
    const PairSymbols sym(p);

    Classification cls;
    double mink = 0.0, sitter = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (dw0.excluded[i]) continue;
        PairEval e = eval_pair(p, sym, grid.point(i));
        for (int k = 0; k < 3; ++k) {
            mink = std::max(mink, std::fabs(dw0.values[i][static_cast<std::size_t>(k)]));
            sitter = std::max(sitter, std::fabs(dw0.values[i][static_cast<std::size_t>(k)] - e.vol[static_cast<std::size_t>(k)]));
        }
    }
    cls.minkowski_residual = mink;
    cls.desitter_residual = sitter;
    CurvatureField k = curvature(p, conn, grid, policy);
    cls.spread = k.max_value - k.min_value;
    if (mink <= tol && sitter <= tol) {
        cls.ambiguous = true;
        cls.label = mink <= sitter ? TransverseClass::Minkowski : TransverseClass::DeSitter;
    } else if (mink <= tol) {
        cls.label = TransverseClass::Minkowski;
    } else if (sitter <= tol) {
        cls.label = TransverseClass::DeSitter;
    } else if (cls.spread <= tol) {
        cls.label = TransverseClass::ConstantCurvature;
        cls.constant_value = 0.5 * (k.min_value + k.max_value);
    } else {
        cls.label = TransverseClass::NonConstant;
    }
    return cls;
}

FormPair null_coordinate_pair(const Expression& f1, const Expression& f2, const Bindings& consts) {
    Chart ch = Chart::lines("x1", "x2", "x3");
    Form1 o1{ch, {exp(f1).simplify(), Expression(), Expression()}};
    Form1 o2{ch, {Expression(), exp(f2).simplify(), Expression()}};
    return FormPair{o1, o2, consts, std::nullopt};
}

double curvature_crosscheck(const Expression& f, const GridSpec& grid, const Bindings& consts,
                            ExecPolicy policy) {
    FormPair p = null_coordinate_pair(f, Expression(), consts);
    // force the generic numeric route so the closed-form formula below stays
    // an independent check
    ConnectionForm conn;
    conn.values.assign(grid.size(), {0, 0, 0});
    const PairSymbols sym(p);
    std::vector<double> res(grid.size(), 0.0);
    grid_for_each(grid, policy, [&](std::size_t i) {
        PairEval e = eval_pair(p, sym, grid.point(i));
        conn.values[i] = connection_ls(e, &res[i]);
    });
    for (double r : res) conn.residual = std::max(conn.residual, r);
    CurvatureField k = curvature(p, conn, grid, policy);

    const Chart& ch = p.omega1.chart;
    Expression f12 = f.differentiate(ch.name(0)).differentiate(ch.name(1));
    Expression reference = (Expression() - f12 * exp(Expression() - f)).simplify();
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (std::isnan(k.values[i])) continue;
        Bindings b = bind_point(ch, grid.point(i), consts);
        worst = std::max(worst, std::fabs(k.values[i] - reference.evaluate(b)));
    }
    return worst;
}

}  // namespace lorfol
