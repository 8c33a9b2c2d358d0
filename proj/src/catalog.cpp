#include "lorfol/catalog.hpp"

#include <cmath>

namespace lorfol {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

Expression E(const char* text) { return parse_expression(text); }

Chart torus_chart() {
    Chart c;
    c.coords = {Coordinate{"x", Topology::Circle, kTwoPi}, Coordinate{"y", Topology::Circle, kTwoPi},
                Coordinate{"z", Topology::Circle, kTwoPi}};
    return c;
}

double get_param(const CatalogEntry& e, const CatalogOverrides& ov, const std::string& key) {
    auto it = ov.values.find(key);
    if (it != ov.values.end()) return it->second;
    return e.defaults.at(key);
}

CatalogObject make_flat_t3(const CatalogEntry& e, const CatalogOverrides&) {
    Chart c = torus_chart();
    FormPair p;
    p.omega1 = Form1{c, {E("cos(x)"), Expression::constant(0), E("sin(x)")}};
    p.omega2 = Form1{c, {Expression::constant(0), E("cos(y)"), E("-sin(y)")}};
    p.connection_hint = Form1{c, {Expression::constant(0), Expression::constant(0),
                                  Expression::constant(1)}};
    CatalogObject out;
    out.entry = e;
    out.pair = std::move(p);
    out.default_grid = GridSpec::cube(0.0, kTwoPi, 12);
    return out;
}

CatalogObject make_nonflat_t3a(const CatalogEntry& e, const CatalogOverrides& ov) {
    double lambda = get_param(e, ov, "lambda");
    if (lambda <= 1.0) throw Error("nonflat-t3a needs lambda > 1");
    Chart c;
    c.coords = {Coordinate{"x", Topology::Line}, Coordinate{"y", Topology::Line},
                Coordinate{"z", Topology::Line}};
    c.deck = DeckMap{{lambda, 1.0, 1.0 / lambda}, {0.0, kTwoPi, 0.0}};
    FormPair p;
    p.constants.set("lambda", lambda);
    p.omega1 = Form1{c, {E("cos(y)"), E("lambda^(y/(2*pi))*sin(y)"), Expression::constant(0)}};
    p.omega2 = Form1{c, {E("sin(y)"), E("-(lambda^(y/(2*pi))*cos(y))"), Expression::constant(0)}};
    p.connection_hint =
        Form1{c, {E("lambda^(-(y/(2*pi)))*cos(2*y)"), E("sin(2*y)"), Expression::constant(0)}};
    CatalogObject out;
    out.entry = e;
    out.pair = std::move(p);
    out.default_grid = GridSpec{{AxisSpec{-1.0, 1.0, 12}, AxisSpec{0.0, kTwoPi, 12},
                                 AxisSpec{-1.0, 1.0, 12}}};
    double quad = lambda + 1.0 / lambda;
    if (std::fabs(quad - std::round(quad)) > 1e-9)
        out.warnings.push_back("lambda + 1/lambda = " + std::to_string(quad) +
                               " is not an integer; the pair does not descend to the compact "
                               "quotient (the identities hold regardless)");
    return out;
}

CatalogObject make_moussu(const CatalogEntry& e, const CatalogOverrides&, bool second) {
    Chart c;
    c.coords = {Coordinate{"r", Topology::Line}, Coordinate{"u", Topology::Circle, 1.0},
                Coordinate{"v", Topology::Circle, 1.0}};
    // Omega = (dr or (1-2r) dr) + phi(r) w with the bump phi(r) = sin(pi r)
    // and w = du a linear torus form.
    Form1 f{c, {second ? E("1-2*r") : Expression::constant(1), E("sin(pi*r)"),
                Expression::constant(0)}};
    CatalogObject out;
    out.entry = e;
    out.single_form = std::move(f);
    out.default_grid = GridSpec{{AxisSpec{0.0, 1.0, 9}, AxisSpec{0.0, 1.0, 9},
                                 AxisSpec{0.0, 1.0, 9}}};
    return out;
}

CatalogObject make_incomplete_cylinder(const CatalogEntry& e, const CatalogOverrides& ov) {
    double lambda = get_param(e, ov, "lambda");
    if (lambda <= 1.0) throw Error("incomplete-cylinder needs lambda > 1");
    NullMetric m;
    m.f = E("-(x2*ln(lambda))");
    m.constants.set("lambda", lambda);
    m.deck = DeckMap2{lambda, 0.0, 1.0, 1.0};
    CatalogObject out;
    out.entry = e;
    out.metric = std::move(m);
    out.default_grid = GridSpec{{AxisSpec{0.5, 2.0, 9}, AxisSpec{0.0, 1.0, 9}, AxisSpec{0, 0, 1}}};
    return out;
}

CatalogObject make_desitter(const CatalogEntry& e, const CatalogOverrides&) {
    NullMetric m;
    m.f = E("-2*ln(cosh((x1+x2)/sqrt(2)))");
    CatalogObject out;
    out.entry = e;
    out.metric = std::move(m);
    out.default_grid = GridSpec{{AxisSpec{-1.0, 1.0, 9}, AxisSpec{-1.0, 1.0, 9}, AxisSpec{0, 0, 1}}};
    return out;
}

CatalogObject make_clifton_pohl(const CatalogEntry& e, const CatalogOverrides&) {
    NullMetric m;
    m.f = E("-ln(x1^2+x2^2)");
    CatalogObject out;
    out.entry = e;
    out.metric = std::move(m);
    out.default_grid = GridSpec{{AxisSpec{0.5, 2.0, 9}, AxisSpec{0.5, 2.0, 9}, AxisSpec{0, 0, 1}}};
    return out;
}

CatalogObject make_suspension(const CatalogEntry& e, const CatalogOverrides& ov) {
    Expression speed = ov.speed ? parse_expression(*ov.speed) : Expression::constant(1);
    CatalogObject out;
    out.entry = e;
    out.flow.emplace(std::array<std::array<long, 2>, 2>{{{2, 1}, {1, 1}}}, speed);
    out.default_grid = GridSpec::cube(0.0, 1.0, 5);
    return out;
}

}  // namespace

std::string to_string(EntryKind k) {
    switch (k) {
        case EntryKind::FormPair: return "form-pair";
        case EntryKind::SingleForm: return "single-form";
        case EntryKind::NullMetric: return "null-metric";
        case EntryKind::Suspension: return "suspension";
    }
    return "?";
}

const std::vector<CatalogEntry>& catalog_list() {
    static const std::vector<CatalogEntry> entries = {
        {"flat-t3", EntryKind::FormPair,
         "flat defining pair on the 3-torus: w1 = cos x dx + sin x dz, w2 = cos y dy - sin y dz; "
         "connection dz, transversely Minkowski",
         {}},
        {"nonflat-t3a", EntryKind::FormPair,
         "non-flat pair on the T^3_A chart: w1 = cos y dx + lambda^{y/2pi} sin y dy (and its "
         "partner), deck (x,y,z) -> (lambda x, y + 2pi, z/lambda); nonconstant curvature",
         {{"lambda", 2.0}}},
        {"moussu-roussarie-1", EntryKind::SingleForm,
         "Reeb-type component form Omega1 = dr + phi(r) w, phi(r) = sin(pi r), w = du",
         {}},
        {"moussu-roussarie-2", EntryKind::SingleForm,
         "type II component form Omega2 = (1-2r) dr + phi(r) w, phi(r) = sin(pi r), w = du",
         {}},
        {"incomplete-cylinder", EntryKind::NullMetric,
         "e^f dx1 dx2 with f = -x2 ln lambda on the cylinder quotient by "
         "(x1, x2) -> (lambda x1, x2 + 1); lightlike-incomplete",
         {{"lambda", 2.0}}},
        {"desitter-null", EntryKind::NullMetric,
         "f = -2 ln cosh((x1+x2)/sqrt 2): Liouville solution with constant transverse "
         "curvature K = 1",
         {}},
        {"clifton-pohl", EntryKind::NullMetric,
         "f = -ln(x1^2 + x2^2) on the punctured plane; classical incomplete integrator fixture, "
         "not tied to the foliation examples",
         {}},
        {"suspension-A", EntryKind::Suspension,
         "suspension flow of A = [[2,1],[1,1]] on T^3_A, unit speed by default",
         {}},
    };
    return entries;
}

CatalogObject catalog_get(const std::string& name, const CatalogOverrides& ov) {
    const CatalogEntry* entry = nullptr;
    for (const CatalogEntry& e : catalog_list())
        if (e.name == name) entry = &e;
    if (!entry) throw Error("unknown catalog entry '" + name + "'");
    for (const auto& [k, v] : ov.values) {
        (void)v;
        if (entry->defaults.find(k) == entry->defaults.end())
            throw Error("entry '" + name + "' has no parameter '" + k + "'");
    }
    if (ov.speed && entry->kind != EntryKind::Suspension)
        throw Error("entry '" + name + "' takes no speed override");

    if (name == "flat-t3") return make_flat_t3(*entry, ov);
    if (name == "nonflat-t3a") return make_nonflat_t3a(*entry, ov);
    if (name == "moussu-roussarie-1") return make_moussu(*entry, ov, false);
    if (name == "moussu-roussarie-2") return make_moussu(*entry, ov, true);
    if (name == "incomplete-cylinder") return make_incomplete_cylinder(*entry, ov);
    if (name == "desitter-null") return make_desitter(*entry, ov);
    if (name == "clifton-pohl") return make_clifton_pohl(*entry, ov);
    if (name == "suspension-A") return make_suspension(*entry, ov);
    throw Error("unknown catalog entry '" + name + "'");
}

double verify_entry(const CatalogObject& obj, ExecPolicy policy) {
    switch (obj.entry.kind) {
        case EntryKind::FormPair: {
            VerificationReport r = check_frobenius(*obj.pair, obj.default_grid, policy);
            double vol = check_transverse_volume(*obj.pair, obj.default_grid, policy);
            return std::max({r.frobenius_residual1, r.frobenius_residual2, vol});
        }
        case EntryKind::SingleForm: {
            // integrability Omega ^ dOmega = 0
            const Form1& f = *obj.single_form;
            Form3 w = wedge12(f, d1(f));
            double worst = 0.0;
            for (std::size_t i = 0; i < obj.default_grid.size(); ++i) {
                Bindings b = bind_point(f.chart, obj.default_grid.point(i), {});
                worst = std::max(worst, std::fabs(evaluate(w, b)));
            }
            return worst;
        }
        case EntryKind::NullMetric: {
            if (!obj.metric->deck) return 0.0;
            return check_deck_invariance(*obj.metric, obj.default_grid);
        }
        case EntryKind::Suspension: {
            // cocycle additivity over a few fixed triples
            const SuspensionFlow& f = *obj.flow;
            double worst = 0.0;
            const double ts[3] = {0.37, 1.21, 2.6};
            const double ss[3] = {0.53, -0.8, 1.7};
            for (int i = 0; i < 3; ++i) {
                T3Point x{0.21 + 0.1 * i, 0.68 - 0.2 * i, 0.33 + 0.15 * i};
                auto fr = f.flow(x, ts[i]);
                double lhs = f.cocycle_u(x, ts[i] + ss[i]);
                double rhs = fr.u + f.cocycle_u(fr.point, ss[i]);
                worst = std::max(worst, std::fabs(lhs - rhs));
            }
            return worst;
        }
    }
    return 0.0;
}

}  // namespace lorfol
