#include "lorfol/metric.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace lorfol {

namespace {

struct CompiledMetric {
    Expression f, f1, f2;
    std::string x1, x2;
    Bindings consts;

    explicit CompiledMetric(const NullMetric& m)
        : f(m.f.simplify()),
          f1(m.f.differentiate(m.x1)),
          f2(m.f.differentiate(m.x2)),
          x1(m.x1),
          x2(m.x2),
          consts(m.constants) {}

    double eval(const Expression& e, double x1v, double x2v) const {
        Bindings b = consts;
        b.values[x1] = x1v;
        b.values[x2] = x2v;
        return e.evaluate(b);
    }
    StateDerivative rhs(const GeodesicState& s) const {
        double g1 = eval(f1, s.x1, s.x2);
        double g2 = eval(f2, s.x1, s.x2);
        return {s.v1, s.v2, -g1 * s.v1 * s.v1, -g2 * s.v2 * s.v2};
    }
    double energy(const GeodesicState& s) const {
        return std::exp(eval(f, s.x1, s.x2)) * s.v1 * s.v2;
    }
};

// Dormand-Prince 5(4) coefficients.
constexpr double kA[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
};
constexpr double kC[7] = {0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double kE[7] = {71.0 / 57600, 0.0,           -71.0 / 16695, 71.0 / 1920,
                          -17253.0 / 339200, 22.0 / 525, -1.0 / 40};

struct StepResult {
    GeodesicState next;
    double error;  // scaled error estimate
};

StepResult dopri_step(const CompiledMetric& m, const GeodesicState& s, double h,
                      const IntegratorOptions& opts) {
    StateDerivative k[7];
    k[0] = m.rhs(s);
    for (int stage = 1; stage < 7; ++stage) {
        GeodesicState y = s;
        for (int j = 0; j < stage; ++j) {
            double a = kA[stage][j] * h;
            y.x1 += a * k[j].dx1;
            y.x2 += a * k[j].dx2;
            y.v1 += a * k[j].dv1;
            y.v2 += a * k[j].dv2;
        }
        (void)kC;
        k[stage] = m.rhs(y);
    }
    GeodesicState out = s;
    for (int j = 0; j < 6; ++j) {  // 5th-order solution weights (k[6] only feeds the estimator)
        double a = kA[6][j] * h;
        out.x1 += a * k[j].dx1;
        out.x2 += a * k[j].dx2;
        out.v1 += a * k[j].dv1;
        out.v2 += a * k[j].dv2;
    }
    out.t = s.t + h;

    double err[4] = {0, 0, 0, 0};
    for (int j = 0; j < 7; ++j) {
        err[0] += kE[j] * k[j].dx1;
        err[1] += kE[j] * k[j].dx2;
        err[2] += kE[j] * k[j].dv1;
        err[3] += kE[j] * k[j].dv2;
    }
    auto scale = [&](double ynew, double yold) {
        return opts.abs_tol + opts.rel_tol * std::max(std::fabs(ynew), std::fabs(yold));
    };
    double e2 = 0.0;
    double comp[4][2] = {{out.x1, s.x1}, {out.x2, s.x2}, {out.v1, s.v1}, {out.v2, s.v2}};
    for (int j = 0; j < 4; ++j) {
        double e = h * err[j] / scale(comp[j][0], comp[j][1]);
        e2 += e * e;
    }
    return {out, std::sqrt(e2 / 4.0)};
}

struct BlowUpFit {
    double t_star;
    double uncertainty;
};

// Linear fit of 1/|v| against t over the trailing window; near blow-up
// v ~ C/(t* - t) so the fit extrapolates to the root.
BlowUpFit fit_blowup(const std::deque<std::pair<double, double>>& window) {
    double n = static_cast<double>(window.size());
    const double t0 = window.front().first;  // center to avoid cancellation
    double st = 0, sy = 0, stt = 0, sty = 0;
    for (const auto& [t, y] : window) {
        double dt = t - t0;
        st += dt;
        sy += y;
        stt += dt * dt;
        sty += dt * y;
    }
    double denom = n * stt - st * st;
    double slope = (n * sty - st * sy) / denom;
    double intercept = (sy - slope * st) / n;
    double t_star = t0 - intercept / slope;
    double rss = 0.0;
    for (const auto& [t, y] : window) {
        double r = y - (slope * (t - t0) + intercept);
        rss += r * r;
    }
    double rms = std::sqrt(rss / n);
    double unc = std::max(2.0 * rms / std::fabs(slope), 1e-9 * std::fabs(t_star));
    return {t_star, unc};
}

}  // namespace

StateDerivative geodesic_rhs(const NullMetric& m, const GeodesicState& s) {
    return CompiledMetric(m).rhs(s);
}

IntegrationResult integrate(const NullMetric& m, const GeodesicState& s0, double horizon,
                            const IntegratorOptions& opts) {
    if (horizon <= 0.0) throw Error("integration horizon must be positive");
    CompiledMetric cm(m);
    IntegrationResult out;
    GeodesicState s = s0;
    double e0 = cm.energy(s);
    double drift = 0.0;
    double h = std::min(opts.h_init, horizon);
    std::deque<std::pair<double, double>> inv_v_window;
    std::size_t accepted = 0;

    auto record = [&](const GeodesicState& st) {
        if (accepted % opts.sample_stride == 0)
            out.samples.push_back({st.t, st.x1, st.x2, st.v1, st.v2, cm.energy(st)});
    };
    record(s);

    // PI step-size controller (orders 5/4)
    double prev_error = 1.0;
    const double kBeta = 0.08, kAlpha = 0.7 / 5.0;

    for (std::size_t step = 0; step < opts.max_steps; ++step) {
        if (s.t >= horizon) {
            out.verdict.tag = CompletenessVerdict::Tag::ReachedHorizon;
            out.verdict.steps = accepted;
            out.verdict.max_energy_drift = drift;
            return out;
        }
        h = std::min(h, horizon - s.t);
        StepResult r = dopri_step(cm, s, h, opts);
        double vnorm = std::hypot(r.next.v1, r.next.v2);
        if (!std::isfinite(r.error) || !std::isfinite(vnorm)) {
            h *= 0.25;
        } else if (r.error <= 1.0) {
            s = r.next;
            ++accepted;
            double e = cm.energy(s);
            if (e0 != 0.0) drift = std::max(drift, std::fabs(e - e0) / std::fabs(e0));
            double inv_v = 1.0 / std::max(vnorm, 1e-300);
            // record only on meaningful decay of 1/|v|, so the fit window keeps
            // dynamic range instead of clustering at the final clamped steps
            if (inv_v_window.empty() || inv_v < 0.5 * inv_v_window.back().second) {
                inv_v_window.emplace_back(s.t, inv_v);
                if (inv_v_window.size() > 20) inv_v_window.pop_front();
            }
            record(s);
            double fac = 0.9 * std::pow(1.0 / std::max(r.error, 1e-10), kAlpha) *
                         std::pow(prev_error, kBeta);
            prev_error = std::max(r.error, 1e-10);
            h *= std::clamp(fac, 0.2, 5.0);
        } else {
            h *= std::max(0.2, 0.9 * std::pow(1.0 / r.error, kAlpha));
        }
        if (h < opts.h_min) {
            double vnow = std::hypot(s.v1, s.v2);
            if (vnow > opts.v_blowup && inv_v_window.size() >= 5) {
                BlowUpFit fit = fit_blowup(inv_v_window);
                out.verdict.tag = CompletenessVerdict::Tag::BlowUp;
                out.verdict.t_star = fit.t_star;
                out.verdict.t_star_uncertainty = fit.uncertainty;
                out.verdict.steps = accepted;
                out.verdict.max_energy_drift = drift;
                if (out.samples.empty() || out.samples.back().t != s.t)
                    out.samples.push_back({s.t, s.x1, s.x2, s.v1, s.v2, cm.energy(s)});
                return out;
            }
            throw NumericFailure("step size collapsed without blow-up signature at t = " +
                                 std::to_string(s.t));
        }
    }
    throw NumericFailure("maximum step count exceeded before reaching the horizon");
}

double check_deck_invariance(const NullMetric& m, const GridSpec& grid) {
    if (!m.deck) throw Error("metric has no deck transformation");
    const DeckMap2& g = *m.deck;
    CompiledMetric cm(m);
    double worst = 0.0;
    for (int i = 0; i < grid.axes[0].n; ++i) {
        for (int j = 0; j < grid.axes[1].n; ++j) {
            double x1 = grid.coord(0, static_cast<std::size_t>(i));
            double x2 = grid.coord(1, static_cast<std::size_t>(j));
            double here = std::exp(cm.eval(cm.f, x1, x2));
            double pulled =
                std::exp(cm.eval(cm.f, g.s1 * x1 + g.o1, g.s2 * x2 + g.o2)) * g.s1 * g.s2;
            worst = std::max(worst, std::fabs(pulled - here) / std::fabs(here));
        }
    }
    return worst;
}

GeodesicState apply_deck(const DeckMap2& g, const GeodesicState& s, long power) {
    GeodesicState out = s;
    for (long k = 0; k < std::labs(power); ++k) {
        if (power > 0) {
            out.x1 = g.s1 * out.x1 + g.o1;
            out.x2 = g.s2 * out.x2 + g.o2;
            out.v1 *= g.s1;
            out.v2 *= g.s2;
        } else {
            out.x1 = (out.x1 - g.o1) / g.s1;
            out.x2 = (out.x2 - g.o2) / g.s2;
            out.v1 /= g.s1;
            out.v2 /= g.s2;
        }
    }
    return out;
}

WrappedTrajectory project_to_quotient(const std::vector<TrajectoryPoint>& traj, const DeckMap2& deck,
                                      double base) {
    if (deck.o2 == 0.0) throw Error("deck transformation does not translate x2; cannot wrap");
    WrappedTrajectory out;
    out.samples.reserve(traj.size());
    out.wraps.reserve(traj.size());
    for (const TrajectoryPoint& p : traj) {
        long k = static_cast<long>(std::floor((p.x2 - base) / deck.o2));
        GeodesicState s{p.x1, p.x2, p.v1, p.v2, p.t};
        GeodesicState w = apply_deck(deck, s, -k);
        out.samples.push_back({p.t, w.x1, w.x2, w.v1, w.v2, p.energy});
        out.wraps.push_back(-k);
    }
    return out;
}

}  // namespace lorfol
