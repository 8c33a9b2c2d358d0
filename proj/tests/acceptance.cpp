// End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
// the exit code is the number of failures. argv[1] is the path to the CLI
// binary (used for the determinism check).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lorfol/catalog.hpp"
#include "lorfol/einstein.hpp"

using namespace lorfol;

namespace {

Expression E(const char* s) { return parse_expression(s); }

double sup_abs(const std::vector<double>& v) {
    double out = 0.0;
    for (double x : v)
        if (std::isfinite(x)) out = std::max(out, std::fabs(x));
    return out;
}

// Random smooth expression over x1, x2 (no poles; polynomial/trig only).
Expression random_f(std::mt19937& rng, int depth) {
    std::uniform_real_distribution<double> uc(-1.0, 1.0);
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 5);
    switch (pick(rng)) {
        case 0: return Expression::constant(uc(rng));
        case 1: return Expression::name(rng() % 2 ? "x1" : "x2");
        case 2: return random_f(rng, depth - 1) + random_f(rng, depth - 1);
        case 3: return random_f(rng, depth - 1) * random_f(rng, depth - 1);
        case 4: return sin(random_f(rng, depth - 1));
        default: return cos(random_f(rng, depth - 1));
    }
}

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

// --- criterion 1: flat example pipeline on a 32^3 grid, under 5 seconds -----
bool criterion1(std::string& detail) {
    auto t0 = std::chrono::steady_clock::now();
    CatalogObject obj = catalog_get("flat-t3");
    GridSpec g = GridSpec::cube(0.0, 2 * M_PI, 32);
    ConnectionForm conn = solve_connection(*obj.pair, g);
    double dz_defect = 0.0;
    for (const auto& v : conn.values) {
        if (!std::isfinite(v[0])) continue;
        dz_defect = std::max({dz_defect, std::fabs(v[0]), std::fabs(v[1]), std::fabs(v[2] - 1.0)});
    }
    CurvatureField k = curvature(*obj.pair, conn, g);
    double kmax = sup_abs(k.values);
    Classification c = classify(*obj.pair, g);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ostringstream os;
    os << "omega0 defect vs dz " << dz_defect << ", residual " << conn.residual << ", max|K| "
       << kmax << ", label " << to_string(c.label) << ", " << secs << " s";
    detail = os.str();
    return dz_defect <= 1e-8 && conn.residual <= 1e-10 && kmax <= 1e-9 &&
           c.label == TransverseClass::Minkowski && secs < 5.0;
}

// --- criterion 2: non-flat example against the closed forms -----------------
bool criterion2(std::string& detail) {
    CatalogOverrides ov;
    ov.values["lambda"] = 2.0;
    CatalogObject obj = catalog_get("nonflat-t3a", ov);
    GridSpec g{{AxisSpec{-0.5, 0.5, 2}, AxisSpec{0.0, 2 * M_PI, 64}, AxisSpec{-0.5, 0.5, 2}}};
    ConnectionForm conn = solve_connection(*obj.pair, g);
    const double l2pi = std::log(2.0) / (2 * M_PI);
    double w_err = 0.0, k_err = 0.0, k0_err = 1.0;
    CurvatureField k = curvature(*obj.pair, conn, g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        double y = g.point(i)[1];
        double c1 = std::pow(2.0, -y / (2 * M_PI)) * std::cos(2 * y);
        double c2 = std::sin(2 * y);
        const auto& v = conn.values[i];
        if (std::isfinite(v[0]))
            w_err = std::max({w_err, std::fabs(v[0] - c1), std::fabs(v[1] - c2), std::fabs(v[2])});
        double k_true = -std::pow(2.0, -y / M_PI) * (l2pi * std::cos(2 * y) + 2 * std::sin(2 * y));
        if (std::isfinite(k.values[i])) {
            k_err = std::max(k_err, std::fabs(k.values[i] - k_true));
            if (y == 0.0) k0_err = std::min(k0_err, std::fabs(k.values[i] + l2pi));
        }
    }
    Classification c = classify(*obj.pair, g);
    std::ostringstream os;
    os << "omega0 err " << w_err << ", K err " << k_err << ", K(0) err " << k0_err << ", label "
       << to_string(c.label);
    detail = os.str();
    return w_err <= 1e-8 && k_err <= 1e-6 && k0_err <= 1e-9 &&
           c.label == TransverseClass::NonConstant;
}

// --- criterion 3: curvature law on fixed and random conformal factors -------
bool criterion3(std::string& detail) {
    GridSpec g = GridSpec::cube(-1.0, 1.0, 8);
    double worst = 0.0;
    for (const char* f : {"0", "x1*x2", "sin(x1)*cos(x2)", "-2*ln(cosh((x1+x2)/sqrt(2)))"})
        worst = std::max(worst, curvature_crosscheck(E(f), g));
    std::mt19937 rng(424242);
    for (int i = 0; i < 10; ++i) worst = std::max(worst, curvature_crosscheck(random_f(rng, 3), g));
    std::ostringstream os;
    os << "worst crosscheck residual " << worst;
    detail = os.str();
    return worst <= 1e-6;
}

// --- criterion 4: de Sitter detection ----------------------------------------
bool criterion4(std::string& detail) {
    CatalogObject obj = catalog_get("desitter-null");
    FormPair pair = null_coordinate_pair(obj.metric->f, Expression::constant(0));
    GridSpec g = obj.default_grid;
    Classification c = classify(pair, g);
    ConnectionForm conn = solve_connection(pair, g);
    double defect = 0.0;
    if (conn.symbolic) {
        Form2 lhs = d1(*conn.symbolic);
        Form2 rhs = wedge11(pair.omega1, pair.omega2);
        for (std::size_t i = 0; i < g.size(); ++i) {
            Bindings b = bind_point(pair.omega1.chart, g.point(i), pair.constants);
            auto lv = evaluate(lhs, b);
            auto rv = evaluate(rhs, b);
            for (int j = 0; j < 3; ++j) defect = std::max(defect, std::fabs(lv[j] - rv[j]));
        }
    } else {
        defect = 1.0;
    }
    std::ostringstream os;
    os << "label " << to_string(c.label) << ", max|d(omega0) - omega1^omega2| " << defect;
    detail = os.str();
    return c.label == TransverseClass::DeSitter && defect <= 1e-8;
}

// --- criterion 5: incompleteness and long-horizon stability -----------------
bool criterion5(std::string& detail) {
    CatalogObject obj = catalog_get("incomplete-cylinder");
    IntegrationResult blow = integrate(*obj.metric, {0.0, 0.0, 0.0, 1.0, 0.0}, 100.0);
    bool blew = blow.verdict.tag == CompletenessVerdict::Tag::BlowUp;
    double t_star = blow.verdict.t_star;

    NullMetric flat{Expression::constant(0), "x1", "x2", {}, {}};
    IntegrationResult far = integrate(flat, {0.0, 0.0, 1.0, 1.0, 0.0}, 1e6);
    bool reached = far.verdict.tag == CompletenessVerdict::Tag::ReachedHorizon;
    std::ostringstream os;
    os << "t* " << t_star << " (target [1.428, 1.457]), flat drift "
       << far.verdict.max_energy_drift;
    detail = os.str();
    return blew && t_star >= 1.428 && t_star <= 1.457 && reached &&
           far.verdict.max_energy_drift <= 1e-6;
}

// --- criterion 6: cocycle additivity and periodic multiplicativity ----------
bool criterion6(std::string& detail) {
    SuspensionFlow v({{{2, 1}, {1, 1}}}, E("1+sin(2*pi*s)/2"));
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> up(0.0, 1.0), ut(-10.0, 10.0);
    double add_err = 0.0;
    for (int i = 0; i < 100; ++i) {
        T3Point x{up(rng), up(rng), up(rng)};
        double t = ut(rng), s = ut(rng);
        auto ft = v.flow(x, t);
        add_err = std::max(add_err,
                           std::fabs(v.cocycle_u(x, s + t) - (ft.u + v.cocycle_u(ft.point, s))));
    }
    T3Point fixed{0.0, 0.0, 0.0};
    auto period = v.first_hit_time(fixed, v.log_multiplier(), 10.0, false);
    double mult_err = 1.0;
    if (period) {
        mult_err = 0.0;
        double u1 = v.cocycle_u(fixed, *period);
        for (int n = 1; n <= 5; ++n)
            mult_err = std::max(mult_err, std::fabs(v.cocycle_u(fixed, n * *period) - n * u1));
    }
    std::ostringstream os;
    os << "additivity " << add_err << ", multiplicativity " << mult_err;
    detail = os.str();
    return add_err <= 1e-9 && mult_err <= 1e-9;
}

// --- criterion 7: encadrement bound on 10^3 random samples -------------------
bool criterion7(std::string& detail) {
    SuspensionFlow unit = SuspensionFlow::unit_speed({{{2, 1}, {1, 1}}});
    SuspensionFlow var({{{2, 1}, {1, 1}}}, E("1+sin(2*pi*s)/2"));
    std::mt19937 rng(31337);
    std::uniform_real_distribution<double> up(0.0, 1.0), ut(0.0, 6.0);
    double worst = 1.0;
    for (const SuspensionFlow* f : {&unit, &var}) {
        for (int i = 0; i < 125; ++i) {
            T3Point x{up(rng), up(rng), up(rng)};
            EncadrementResult r = encadrement_check(*f, x, ut(rng), 1.0, 8);
            worst = std::min(worst, r.worst_margin);
        }
    }
    std::ostringstream os;
    os << "worst margin " << worst << " over 2000 sampled (x, s, t)";
    detail = os.str();
    return worst >= -1e-9;
}

// --- criterion 8: strong-bundle solver oracles -------------------------------
bool criterion8(std::string& detail) {
    SuspensionFlow f = SuspensionFlow::unit_speed({{{2, 1}, {1, 1}}});
    BundleGrid grid{16, 16, 16};
    BundleSolveResult zero = strong_bundle_solve(f, Expression::constant(0), 1.0, grid, 1e-12, 200);
    double sup0 = sup_abs(zero.candidate.f);
    BundleSolveResult one = strong_bundle_solve(f, Expression::constant(1), 1.0, grid, 1e-12, 200);
    double dev = 0.0;
    for (double v : one.candidate.f) dev = std::max(dev, std::fabs(v + 1.0));
    double rate = one.report.contraction_rate;
    double target = 1.0 / f.multiplier();
    std::ostringstream os;
    os << "eigen-section sup " << sup0 << ", shifted f0 deviation " << dev << ", rate " << rate
       << " vs " << target;
    detail = os.str();
    return sup0 <= 1e-9 && dev <= 1e-6 && std::fabs(rate - target) <= 0.1 * target;
}

// --- criterion 9: Einstein torus identities ----------------------------------
bool criterion9(std::string& detail) {
    double pb = pullback_identity_residual(50, 0.1);
    double iso = fA_isometry_residual(HyperbolicParam{2.0}, 40);
    EquicontinuityResult inner = equicontinuity_probe(HyperbolicParam{2.0}, embed_psi(1.0, 1.0), 20);
    EquicontinuityResult edge =
        equicontinuity_probe(HyperbolicParam{2.0}, ein_point(M_PI / 2, std::atan(1.0)), 10);
    std::ostringstream os;
    os << "pullback " << pb << ", isometry " << iso << ", sup(1,1) " << inner.sup
       << ", sup(pi/2,1) " << edge.sup << " (>= 2^9)";
    detail = os.str();
    return pb <= 1e-10 && iso <= 1e-12 && std::fabs(inner.sup - 1.0) <= 1e-12 &&
           edge.sup >= std::pow(2.0, 9);
}

// --- criterion 10: structural properties and CLI determinism -----------------
std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

bool criterion10(const std::string& cli, std::string& detail) {
    // d(d(.)) = 0 on random 1-forms
    Chart xyz = Chart::lines("x", "y", "z");
    std::mt19937 rng(5150);
    GridSpec g = GridSpec::cube(-1.0, 1.0, 5);
    double dd = 0.0;
    for (int i = 0; i < 20; ++i) {
        Form1 a{xyz, {random_expr3(rng, 3), random_expr3(rng, 3), random_expr3(rng, 3)}};
        Form3 w = d2(d1(a));
        for (std::size_t j = 0; j < g.size(); ++j)
            dd = std::max(dd, std::fabs(evaluate(w, bind_point(xyz, g.point(j), {}))));
    }

    // wedge antisymmetry, exact
    bool antisym = true;
    for (int i = 0; i < 20 && antisym; ++i) {
        Form1 a{xyz, {random_expr3(rng, 3), random_expr3(rng, 3), random_expr3(rng, 3)}};
        Form1 b{xyz, {random_expr3(rng, 3), random_expr3(rng, 3), random_expr3(rng, 3)}};
        Bindings at = bind_point(xyz, g.point(i % g.size()), {});
        auto ab = evaluate(wedge11(a, b), at);
        auto ba = evaluate(wedge11(b, a), at);
        for (int k = 0; k < 3; ++k)
            if (ab[k] != -ba[k]) antisym = false;
    }

    // every catalog entry passes its own verification
    double cat_worst = 0.0;
    for (const CatalogEntry& e : catalog_list()) {
        double tol = e.kind == EntryKind::Suspension ? 1e-9 : 1e-10;
        double res = verify_entry(catalog_get(e.name));
        if (res > tol) cat_worst = std::max(cat_worst, res);
    }

    // CLI determinism: byte-identical reruns
    bool deterministic = true;
    if (cli.empty()) {
        deterministic = false;
    } else {
        const std::string cmds[] = {
            " classify --catalog nonflat-t3a --grid 8 -o ",
            " completeness --catalog incomplete-cylinder --v0 1 -o ",
            " catalog list -o ",
        };
        for (const std::string& cmd : cmds) {
            std::string f1 = "acceptance_run1.json", f2 = "acceptance_run2.json";
            if (std::system((cli + cmd + f1).c_str()) != 0 ||
                std::system((cli + cmd + f2).c_str()) != 0) {
                deterministic = false;
                break;
            }
            std::string a = slurp(f1), b = slurp(f2);
            std::remove(f1.c_str());
            std::remove(f2.c_str());
            if (a.empty() || a != b) deterministic = false;
        }
    }

    std::ostringstream os;
    os << "d.d sup " << dd << ", antisymmetry " << (antisym ? "exact" : "BROKEN")
       << ", catalog excess residual " << cat_worst << ", CLI reruns "
       << (deterministic ? "byte-identical" : "DIFFER");
    detail = os.str();
    return dd <= 1e-9 && antisym && cat_worst == 0.0 && deterministic;
}

}  // namespace

int main(int argc, char** argv) {
    const std::string cli = argc > 1 ? argv[1] : "";
    struct Criterion {
        const char* title;
        bool (*fn)(std::string&);
    };
    const Criterion lib_criteria[] = {
        {"flat example: connection dz, |K| <= 1e-9, Minkowski, < 5 s", criterion1},
        {"non-flat example: omega0 and K match the closed forms", criterion2},
        {"curvature law crosscheck on fixed and random factors", criterion3},
        {"de Sitter detection on the Liouville solution", criterion4},
        {"incompleteness: t* near 1/ln 2; flat metric stable to 1e6", criterion5},
        {"cocycle additivity and periodic multiplicativity", criterion6},
        {"encadrement bound on random samples", criterion7},
        {"strong-bundle solver fixed points and contraction rate", criterion8},
        {"Einstein torus pullback, isometry, equicontinuity", criterion9},
    };
    int failures = 0;
    int idx = 1;
    for (const Criterion& c : lib_criteria) {
        std::string detail;
        bool ok = c.fn(detail);
        std::printf("criterion %2d: %s  %s  [%s]\n", idx++, ok ? "PASS" : "FAIL", c.title,
                    detail.c_str());
        if (!ok) ++failures;
    }
    std::string detail;
    bool ok = criterion10(cli, detail);
    std::printf("criterion %2d: %s  %s  [%s]\n", idx, ok ? "PASS" : "FAIL",
                "structural properties and CLI determinism", detail.c_str());
    if (!ok) ++failures;
    return failures;
}
