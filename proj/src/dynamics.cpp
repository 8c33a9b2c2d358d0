#include "lorfol/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

namespace lorfol {

namespace {

double wrap01(double x) {
    double w = x - std::floor(x);
    return w >= 1.0 ? 0.0 : w;
}

std::array<double, 2> apply_mat(const std::array<std::array<long, 2>, 2>& m,
                                const std::array<double, 2>& p) {
    return {static_cast<double>(m[0][0]) * p[0] + static_cast<double>(m[0][1]) * p[1],
            static_cast<double>(m[1][0]) * p[0] + static_cast<double>(m[1][1]) * p[1]};
}

}  // namespace

SuspensionFlow::SuspensionFlow(std::array<std::array<long, 2>, 2> a, Expression speed,
                               bool allow_nonhyperbolic, const Bindings& consts)
    : a_(a), speed_(speed.simplify()), consts_(consts) {
    std::set<std::string> free;
    speed_.collect_free_names(free);
    bool constant = true;
    for (const std::string& n : free)
        if (n != "pi" && consts_.values.find(n) == consts_.values.end()) constant = false;
    if (constant) {
        double v = speed_.evaluate(consts_);
        if (v <= 0.0) throw Error("suspension speed must stay positive");
        const_speed_ = v;
    }
    long det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if (det != 1 && det != -1) throw Error("suspension matrix must have determinant +-1");
    // A^{-1} = det * adj(A) when det = +-1
    a_inv_ = {{{det * a[1][1], -det * a[0][1]}, {-det * a[1][0], det * a[0][0]}}};
    double tr = static_cast<double>(a[0][0] + a[1][1]);
    double disc = tr * tr - 4.0 * static_cast<double>(det);
    hyperbolic_ = disc > 0.0 && std::fabs(tr) > 2.0 - 1e-15;
    if (!hyperbolic_) {
        if (!allow_nonhyperbolic)
            throw Error("suspension matrix is not hyperbolic (|trace| <= 2)");
        lambda_ = 1.0;
        log_lambda_ = 0.0;
        return;
    }
    double r1 = (tr + std::sqrt(disc)) / 2.0;
    double r2 = (tr - std::sqrt(disc)) / 2.0;
    lambda_ = std::fabs(r1) >= std::fabs(r2) ? r1 : r2;
    double mu = static_cast<double>(det) / lambda_;
    log_lambda_ = std::log(std::fabs(lambda_));
    auto eigvec = [&](double eig) -> std::array<double, 2> {
        double a12 = static_cast<double>(a[0][1]);
        double a21 = static_cast<double>(a[1][0]);
        double a11 = static_cast<double>(a[0][0]);
        double a22 = static_cast<double>(a[1][1]);
        std::array<double, 2> v;
        if (std::fabs(a12) > 1e-12)
            v = {a12, eig - a11};
        else if (std::fabs(a21) > 1e-12)
            v = {eig - a22, a21};
        else
            v = {1.0, 0.0};
        double n = std::hypot(v[0], v[1]);
        return {v[0] / n, v[1] / n};
    };
    e_u_ = eigvec(lambda_);
    e_s_ = eigvec(mu);
}

SuspensionFlow SuspensionFlow::unit_speed(std::array<std::array<long, 2>, 2> a) {
    return SuspensionFlow(a, Expression::constant(1.0));
}

double SuspensionFlow::speed_at(const T3Point& x) const {
    if (const_speed_) return *const_speed_;
    thread_local const SuspensionFlow* last = nullptr;
    thread_local Bindings b;  // avoids re-building the map in inner loops
    if (last != this) {
        b = consts_;
        last = this;
    }
    b.values["p1"] = x.p1;
    b.values["p2"] = x.p2;
    b.values["s"] = x.s;
    double v = speed_.evaluate(b);
    if (v <= 0.0) throw Error("suspension speed must stay positive");
    return v;
}

namespace {

// One RK4 step of s' = dir * v(p, s) inside a fibre (p constant).
double rk4_fibre_step(const SuspensionFlow& f, const T3Point& base, double s, double h, int dir) {
    auto rhs = [&](double sv) {
        T3Point q{base.p1, base.p2, sv};
        return static_cast<double>(dir) * f.speed_at(q);
    };
    double k1 = rhs(s);
    double k2 = rhs(s + 0.5 * h * k1);
    double k3 = rhs(s + 0.5 * h * k2);
    double k4 = rhs(s + h * k3);
    return s + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

struct AdvanceResult {
    T3Point point;
    double t_elapsed = 0.0;
    double sigma = 0.0;
    bool hit_sigma = false;
};

constexpr double kFibreStep = 5e-4;

// Advances by at most |t_limit| of flow time in the given direction, stopping
// early when the signed fibre progress reaches sigma_target (if finite).
AdvanceResult advance(const SuspensionFlow& f, T3Point x, double t_limit, int dir,
                      double sigma_target) {
    AdvanceResult out;
    double remaining = t_limit;
    const bool has_target = std::isfinite(sigma_target);

    if (f.constant_speed()) {
        // closed form: s progresses linearly at the constant speed
        const double v0 = *f.constant_speed();
        double progress = v0 * remaining;
        bool stops_at_target = false;
        if (has_target) {
            double needed = dir > 0 ? sigma_target - out.sigma : out.sigma - sigma_target;
            if (needed >= 0.0 && needed <= progress) {
                progress = needed;
                stops_at_target = true;
            }
        }
        out.t_elapsed = progress / v0;
        double left = progress;
        while (left > 0.0) {
            double room = dir > 0 ? 1.0 - x.s : x.s;
            if (left < room) {
                x.s += dir * left;
                out.sigma += dir * left;
                left = 0.0;
                break;
            }
            left -= room;
            out.sigma += dir * room;
            if (dir > 0) {
                auto p = apply_mat(f.matrix(), {x.p1, x.p2});
                x.p1 = wrap01(p[0]);
                x.p2 = wrap01(p[1]);
                x.s = 0.0;
            } else {
                auto p = apply_mat(f.matrix_inverse(), {x.p1, x.p2});
                x.p1 = wrap01(p[0]);
                x.p2 = wrap01(p[1]);
                x.s = 1.0;
            }
            if (left == 0.0) break;
        }
        out.hit_sigma = stops_at_target;
        out.point = x;
        return out;
    }

    while (remaining > 1e-16) {
        // fibre-local target for s (progress within the current fibre)
        double s_target = has_target
                              ? x.s + (sigma_target - out.sigma)
                              : std::numeric_limits<double>::infinity() * static_cast<double>(dir);
        double h = std::min(kFibreStep, remaining);
        double s_old = x.s;
        double s_new = rk4_fibre_step(f, x, x.s, h, dir);
        double boundary = dir > 0 ? 1.0 : 0.0;
        bool crossed = dir > 0 ? s_new >= boundary : s_new <= boundary;
        bool reached = has_target && (dir > 0 ? s_new >= s_target : s_new <= s_target);
        if (crossed || reached) {
            // whichever of the fibre boundary and the target comes first
            bool stop_is_target =
                reached && (!crossed || (dir > 0 ? s_target <= boundary : s_target >= boundary));
            double stop_s = stop_is_target ? s_target : boundary;
            // bisect the substep for the time at which s == stop_s
            double lo = 0.0, hi = h;
            for (int it = 0; it < 80; ++it) {
                double mid = 0.5 * (lo + hi);
                double sm = rk4_fibre_step(f, x, x.s, mid, dir);
                if ((dir > 0 && sm < stop_s) || (dir < 0 && sm > stop_s))
                    lo = mid;
                else
                    hi = mid;
                if (hi - lo < 1e-16 * (1.0 + h)) break;
            }
            double tau = 0.5 * (lo + hi);
            out.t_elapsed += tau;
            remaining -= tau;
            out.sigma += stop_s - s_old;
            x.s = stop_s;
            if (stop_is_target) {
                out.hit_sigma = true;
                out.point = x;
                return out;
            }
            if (dir > 0) {
                auto p = apply_mat(f.matrix(), {x.p1, x.p2});
                x.p1 = wrap01(p[0]);
                x.p2 = wrap01(p[1]);
                x.s = 0.0;
            } else {
                auto p = apply_mat(f.matrix_inverse(), {x.p1, x.p2});
                x.p1 = wrap01(p[0]);
                x.p2 = wrap01(p[1]);
                x.s = 1.0;
            }
            continue;
        }
        out.t_elapsed += h;
        remaining -= h;
        out.sigma += s_new - s_old;
        x.s = s_new;
    }
    out.point = x;
    return out;
}

}  // namespace

SuspensionFlow::FlowResult SuspensionFlow::flow(const T3Point& x, double t) const {
    int dir = t >= 0.0 ? 1 : -1;
    AdvanceResult r = advance(*this, x, std::fabs(t), dir,
                              std::numeric_limits<double>::quiet_NaN());
    T3Point y = r.point;
    if (y.s >= 1.0) {  // landed exactly on the identification (p, 1) ~ (Ap, 0)
        auto p = apply_mat(a_, {y.p1, y.p2});
        y.p1 = wrap01(p[0]);
        y.p2 = wrap01(p[1]);
        y.s = 0.0;
    }
    return {y, log_lambda_ * r.sigma, r.sigma};
}

double SuspensionFlow::cocycle_u(const T3Point& x, double t) const { return flow(x, t).u; }

std::optional<double> SuspensionFlow::first_hit_time(const T3Point& x, double target, double t_max,
                                                     bool backwards) const {
    if (log_lambda_ == 0.0) return std::nullopt;
    double sigma_target = target / log_lambda_;
    int dir = backwards ? -1 : 1;
    AdvanceResult r = advance(*this, x, t_max, dir, dir > 0 ? sigma_target : -sigma_target);
    if (!r.hit_sigma) return std::nullopt;
    return r.t_elapsed;
}

QuasiAnosovReport quasi_anosov_probe(const SuspensionFlow& f, const std::vector<T3Point>& samples,
                                     double t_max) {
    if (t_max <= 0.0) throw Error("probe horizon must be positive");
    QuasiAnosovReport rep;
    rep.quasi_anosov = true;
    for (const T3Point& x : samples) {
        QuasiAnosovWitness w;
        w.sample = x;
        w.t_expand = f.first_hit_time(x, 1.0, t_max, false);
        w.t_contract = f.first_hit_time(x, 1.0, t_max, true);
        if (!w.t_expand || !w.t_contract) rep.quasi_anosov = false;
        if (w.t_expand) rep.T = std::max(rep.T, *w.t_expand);
        if (w.t_contract) rep.T = std::max(rep.T, *w.t_contract);
        rep.witnesses.push_back(std::move(w));
    }
    if (rep.quasi_anosov) {
        for (const T3Point& x : samples)
            rep.C = std::max(rep.C, std::fabs(f.cocycle_u(x, rep.T)));
    }
    return rep;
}

EncadrementResult encadrement_check(const SuspensionFlow& f, const T3Point& x, double t, double c,
                                    int s_samples) {
    if (t < 0.0 || s_samples < 1) throw Error("encadrement check needs t >= 0 and samples >= 1");
    double ut = f.cocycle_u(x, t);
    double lower = std::min(-c, -c + ut);
    double upper = std::max(c, ut + c);
    EncadrementResult out;
    out.worst_margin = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= s_samples; ++i) {
        double s = t * static_cast<double>(i) / static_cast<double>(s_samples);
        double us = f.cocycle_u(x, s);
        double margin = std::min(us - lower, upper - us);
        if (margin < out.worst_margin) {
            out.worst_margin = margin;
            out.s_at_worst = s;
        }
    }
    out.holds = out.worst_margin >= 0.0;
    return out;
}

T3Point BundleGrid::node(std::size_t flat) const {
    const auto nn2 = static_cast<std::size_t>(n2);
    const auto nn3 = static_cast<std::size_t>(n3);
    std::size_t i1 = flat / (nn2 * nn3);
    std::size_t i2 = (flat / nn3) % nn2;
    std::size_t i3 = flat % nn3;
    return {static_cast<double>(i1) / static_cast<double>(n1),
            static_cast<double>(i2) / static_cast<double>(n2),
            static_cast<double>(i3) / static_cast<double>(n3)};
}

namespace {

// Bilinear interpolation on the periodic p-torus of one s-slice.
double slice_interp(const std::vector<double>& f, const BundleGrid& g, int k, double p1, double p2) {
    double u = wrap01(p1) * g.n1;
    double v = wrap01(p2) * g.n2;
    int i = static_cast<int>(u) % g.n1;
    int j = static_cast<int>(v) % g.n2;
    double wu = u - std::floor(u);
    double wv = v - std::floor(v);
    auto at = [&](int a, int b) {
        a %= g.n1;
        b %= g.n2;
        return f[(static_cast<std::size_t>(a) * static_cast<std::size_t>(g.n2) +
                  static_cast<std::size_t>(b)) *
                     static_cast<std::size_t>(g.n3) +
                 static_cast<std::size_t>(k)];
    };
    return (1 - wu) * ((1 - wv) * at(i, j) + wv * at(i, j + 1)) +
           wu * ((1 - wv) * at(i + 1, j) + wv * at(i + 1, j + 1));
}

// Trilinear interpolation on T^3_A; wrapping across s = 1 applies A to the
// fibre coordinate (the suspension identification (p, 1) ~ (Ap, 0)).
double twisted_interp(const std::vector<double>& f, const BundleGrid& g,
                      const std::array<std::array<long, 2>, 2>& a, const T3Point& y) {
    double w = wrap01(y.s) * g.n3;
    int k = static_cast<int>(w) % g.n3;
    double ws = w - std::floor(w);
    double lo = slice_interp(f, g, k, y.p1, y.p2);
    double hi;
    if (k + 1 < g.n3) {
        hi = slice_interp(f, g, k + 1, y.p1, y.p2);
    } else {
        auto p = apply_mat(a, {y.p1, y.p2});
        hi = slice_interp(f, g, 0, wrap01(p[0]), wrap01(p[1]));
    }
    return (1 - ws) * lo + ws * hi;
}

}  // namespace

std::array<double, 3> bundle_direction(const SuspensionFlow& f, const SplittingCandidate& c,
                                       const T3Point& x, double f_value) {
    Bindings b;
    b.values["p1"] = x.p1;
    b.values["p2"] = x.p2;
    b.values["s"] = x.s;
    double cx = c.eta_flow_coeff.evaluate(b);
    double lam = std::fabs(f.multiplier());
    std::array<double, 2> e = c.side == BundleSide::Unstable ? f.unstable_direction()
                                                             : f.stable_direction();
    double section_scale = c.side == BundleSide::Unstable ? std::pow(lam, -x.s) : std::pow(lam, x.s);
    double flow_coeff = (f_value + cx) * f.speed_at(x);
    return {section_scale * e[0], section_scale * e[1], flow_coeff};
}

BundleSolveResult strong_bundle_solve(const SuspensionFlow& f, const Expression& eta_flow_coeff,
                                      double T, const BundleGrid& grid, double tol, int max_iter,
                                      BundleSide side, ExecPolicy policy) {
    if (T <= 0.0) throw Error("bundle solve needs T > 0");
    const std::size_t n = grid.size();
    std::vector<T3Point> pre(n);       // phi^{-T}(x) (or phi^{+T} for the stable side)
    std::vector<double> u_eff(n);      // cocycle weight of the operator at each node
    std::vector<double> alpha(n);      // inhomogeneity alpha(pre, T)
    Expression cx = eta_flow_coeff.simplify();
    auto cx_at = [&](const T3Point& q) {
        Bindings b;
        b.values["p1"] = q.p1;
        b.values["p2"] = q.p2;
        b.values["s"] = q.s;
        return cx.evaluate(b);
    };

    const double t_signed = side == BundleSide::Unstable ? -T : T;
    const auto in = static_cast<std::ptrdiff_t>(n);
    auto precompute = [&](std::ptrdiff_t i) {
        auto idx = static_cast<std::size_t>(i);
        T3Point x = grid.node(idx);
        auto fr = f.flow(x, t_signed);
        pre[idx] = fr.point;
        u_eff[idx] = side == BundleSide::Unstable ? -fr.u : fr.u;
        alpha[idx] = cx_at(fr.point) - std::exp(u_eff[idx]) * cx_at(x);
    };
    if (policy == ExecPolicy::Parallel) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < in; ++i) precompute(i);
    } else {
        for (std::ptrdiff_t i = 0; i < in; ++i) precompute(i);
    }

    double a = std::numeric_limits<double>::infinity();
    double c_bound = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        a = std::min(a, u_eff[i]);
        c_bound = std::max(c_bound, std::fabs(u_eff[i]));
    }
    if (a <= 0.0)
        throw Error("contraction precondition failed: inf u(., T) = " + std::to_string(a));

    std::vector<double> cur(n, 0.0), next(n, 0.0);
    std::vector<double> changes;
    int iters = 0;
    for (; iters < max_iter; ++iters) {
        auto update = [&](std::ptrdiff_t i) {
            auto idx = static_cast<std::size_t>(i);
            double fv = twisted_interp(cur, grid, f.matrix(), pre[idx]);
            next[idx] = std::exp(-u_eff[idx]) * (fv + alpha[idx]);
        };
        if (policy == ExecPolicy::Parallel) {
#pragma omp parallel for schedule(static)
            for (std::ptrdiff_t i = 0; i < in; ++i) update(i);
        } else {
            for (std::ptrdiff_t i = 0; i < in; ++i) update(i);
        }
        double change = 0.0;
        for (std::size_t i = 0; i < n; ++i) change = std::max(change, std::fabs(next[i] - cur[i]));
        cur.swap(next);
        changes.push_back(change);
        if (change < tol) break;
    }
    if (iters == max_iter) throw Error("bundle solve did not converge within max_iter");

    BundleSolveResult out;
    out.candidate = SplittingCandidate{grid, cur, cx, side};
    out.report.T = T;
    out.report.a = a;
    out.report.C = c_bound;
    out.report.iterations = iters + 1;
    double rate = 0.0;
    for (std::size_t k = 1; k < changes.size(); ++k) {
        if (changes[k - 1] > 0.0 && changes[k] > 1e-14)
            rate = std::max(rate, changes[k] / changes[k - 1]);
    }
    out.report.contraction_rate = rate;
    // Contraction factor promised by the lemma, with interpolation slack.
    if (rate > std::exp(-a) * 1.1)
        throw Error("measured contraction rate exceeds e^{-a} (1 + slack)");
    return out;
}

HyperbolicityReport hyperbolicity_report(const SuspensionFlow& f, double T, const BundleGrid& grid,
                                         double tol, ExecPolicy policy) {
    Expression one = Expression::constant(1.0);
    BundleSolveResult uu = strong_bundle_solve(f, one, T, grid, tol, 400, BundleSide::Unstable, policy);
    BundleSolveResult ss = strong_bundle_solve(f, one, T, grid, tol, 400, BundleSide::Stable, policy);

    auto angle_defect = [&](const BundleSolveResult& r, BundleSide side) {
        double worst = 0.0;
        const BundleGrid& g = r.candidate.grid;
        for (std::size_t i = 0; i < g.size(); i += 7) {  // sample subset of nodes
            T3Point x = g.node(i);
            double fx = r.candidate.f[i];
            auto fr = f.flow(x, T);
            double u = fr.u;
            double scale = side == BundleSide::Unstable ? std::exp(u) : std::exp(-u);
            Bindings b;
            b.values["p1"] = x.p1;
            b.values["p2"] = x.p2;
            b.values["s"] = x.s;
            double cx = r.candidate.eta_flow_coeff.evaluate(b);
            // Dphi^T (f X + eta) = (f + c_X)(x) X(y) + e^{+-u} s_section(y)
            T3Point y = fr.point;
            double lam = std::fabs(f.multiplier());
            std::array<double, 2> e = side == BundleSide::Unstable ? f.unstable_direction()
                                                                   : f.stable_direction();
            double sec_y = side == BundleSide::Unstable ? std::pow(lam, -y.s) : std::pow(lam, y.s);
            std::array<double, 3> img = {scale * sec_y * e[0], scale * sec_y * e[1],
                                         (fx + cx) * f.speed_at(y)};
            double fy = twisted_interp(r.candidate.f, g, f.matrix(), y);
            std::array<double, 3> ref = bundle_direction(f, r.candidate, y, fy);
            double dot = img[0] * ref[0] + img[1] * ref[1] + img[2] * ref[2];
            double ni = std::sqrt(img[0] * img[0] + img[1] * img[1] + img[2] * img[2]);
            double nr = std::sqrt(ref[0] * ref[0] + ref[1] * ref[1] + ref[2] * ref[2]);
            double cosang = std::clamp(std::fabs(dot) / (ni * nr), 0.0, 1.0);
            worst = std::max(worst, std::acos(cosang));
        }
        return worst;
    };

    HyperbolicityReport rep = uu.report;
    rep.invariance_residual =
        std::max(angle_defect(uu, BundleSide::Unstable), angle_defect(ss, BundleSide::Stable));
    return rep;
}

}  // namespace lorfol
