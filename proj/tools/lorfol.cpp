// lorfol: command-line driver for the transversely Lorentzian foliation
// library. Every subcommand prints JSON (or CSV for gridded data) with all
// reals at 17 significant digits, so reruns are byte-comparable.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "lorfol/catalog.hpp"
#include "lorfol/einstein.hpp"

using nlohmann::ordered_json;
using namespace lorfol;

namespace {

// ---------------------------------------------------------------------------
// deterministic formatting

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void dump17(const ordered_json& j, std::string& out, int depth) {
    const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
    const std::string pad1(static_cast<std::size_t>(depth + 1) * 2, ' ');
    switch (j.type()) {
        case ordered_json::value_t::null: out += "null"; break;
        case ordered_json::value_t::boolean: out += j.get<bool>() ? "true" : "false"; break;
        case ordered_json::value_t::string: out += ordered_json(j.get<std::string>()).dump(); break;
        case ordered_json::value_t::number_integer:
            out += std::to_string(j.get<long long>());
            break;
        case ordered_json::value_t::number_unsigned:
            out += std::to_string(j.get<unsigned long long>());
            break;
        case ordered_json::value_t::number_float: {
            double v = j.get<double>();
            if (std::isnan(v) || std::isinf(v))
                out += "null";  // JSON has no non-finite literals
            else
                out += fmt17(v);
            break;
        }
        case ordered_json::value_t::array: {
            if (j.empty()) { out += "[]"; break; }
            out += "[\n";
            for (std::size_t i = 0; i < j.size(); ++i) {
                out += pad1;
                dump17(j[i], out, depth + 1);
                out += i + 1 < j.size() ? ",\n" : "\n";
            }
            out += pad + "]";
            break;
        }
        case ordered_json::value_t::object: {
            if (j.empty()) { out += "{}"; break; }
            out += "{\n";
            std::size_t i = 0;
            for (auto it = j.begin(); it != j.end(); ++it, ++i) {
                out += pad1 + ordered_json(it.key()).dump() + ": ";
                dump17(it.value(), out, depth + 1);
                out += i + 1 < j.size() ? ",\n" : "\n";
            }
            out += pad + "}";
            break;
        }
        default: out += "null"; break;
    }
}

std::string render(const ordered_json& j) {
    std::string out;
    dump17(j, out, 0);
    out += '\n';
    return out;
}

// ---------------------------------------------------------------------------
// shared options

struct Common {
    std::string config;
    std::string format = "json";
    std::string output;
    int threads = 0;
    bool serial = false;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "JSON file whose keys mirror the long flags");
    cmd->add_option("--format", c.format, "Output format: json or csv")
        ->check(CLI::IsMember({"json", "csv"}));
    cmd->add_option("-o,--output", c.output, "Write output to a file instead of stdout");
    cmd->add_option("--threads", c.threads, "Cap the OpenMP thread count");
    cmd->add_flag("--serial", c.serial, "Force the serial evaluation path");
}

void apply_threads(const Common& c) {
#ifdef _OPENMP
    if (c.threads > 0) omp_set_num_threads(c.threads);
#else
    (void)c;
#endif
}

ExecPolicy policy_of(const Common& c) {
    return c.serial ? ExecPolicy::Serial : ExecPolicy::Parallel;
}

void emit(const Common& c, const std::string& text) {
    if (c.output.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(c.output, std::ios::binary);
    if (!out) throw lorfol::Error("cannot open output file '" + c.output + "'");
    out << text;
}

void require_json(const Common& c) {
    if (c.format != "json")
        throw lorfol::Error("this subcommand has no CSV representation; use --format json");
}

// ---------------------------------------------------------------------------
// small parsers

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw lorfol::Error("cannot parse '" + s + "' as a number in " + what);
    }
}

std::vector<double> parse_doubles(const std::string& s, std::size_t n, const std::string& what) {
    auto parts = split(s, ',');
    if (parts.size() != n)
        throw lorfol::Error(what + " needs " + std::to_string(n) + " comma-separated numbers");
    std::vector<double> out;
    for (const auto& p : parts) out.push_back(parse_double(p, what));
    return out;
}

Bindings parse_consts(const std::vector<std::string>& kvs) {
    Bindings b;
    for (const std::string& kv : kvs) {
        auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0)
            throw lorfol::Error("--const expects name=value, got '" + kv + "'");
        b.set(kv.substr(0, eq), parse_double(kv.substr(eq + 1), "--const " + kv));
    }
    return b;
}

GridSpec parse_grid_spec(const std::string& s) {
    auto axes = split(s, ',');
    if (axes.size() != 3)
        throw lorfol::Error("--grid-spec expects lo:hi:n,lo:hi:n,lo:hi:n");
    GridSpec g;
    for (int i = 0; i < 3; ++i) {
        auto f = split(axes[static_cast<std::size_t>(i)], ':');
        if (f.size() != 3) throw lorfol::Error("--grid-spec axis must be lo:hi:n");
        AxisSpec a;
        a.lo = parse_double(f[0], "--grid-spec");
        a.hi = parse_double(f[1], "--grid-spec");
        a.n = static_cast<int>(parse_double(f[2], "--grid-spec"));
        if (a.n < 1) throw lorfol::Error("--grid-spec needs at least 1 point per axis");
        g.axes[static_cast<std::size_t>(i)] = a;
    }
    return g;
}

GridSpec with_resolution(GridSpec g, int n) {
    if (n > 1)
        for (auto& a : g.axes)
            if (a.n > 1) a.n = n;
    return g;
}

ordered_json grid_json(const GridSpec& g) {
    ordered_json axes = ordered_json::array();
    for (const AxisSpec& a : g.axes)
        axes.push_back({{"lo", a.lo}, {"hi", a.hi}, {"n", a.n}});
    return {{"axes", axes}, {"points", g.size()}};
}

// ---------------------------------------------------------------------------
// input sources

struct PairOpts {
    std::string catalog;
    std::string omega1, omega2;
    std::string chart = "x,y,z";
    std::vector<std::string> consts;
    double lambda = 0.0;
    CLI::Option* lambda_opt = nullptr;
    int grid = 0;
    std::string grid_spec;
};

void add_pair_opts(CLI::App* cmd, PairOpts& o) {
    cmd->add_option("--catalog", o.catalog, "Catalog entry name");
    cmd->add_option("--omega1", o.omega1, "Three comma-separated DSL coefficients of omega1");
    cmd->add_option("--omega2", o.omega2, "Three comma-separated DSL coefficients of omega2");
    cmd->add_option("--chart", o.chart, "Coordinate names for inline forms (default x,y,z)");
    cmd->add_option("--const", o.consts, "Named constant binding name=value (repeatable)");
    o.lambda_opt = cmd->add_option("--lambda", o.lambda, "Shorthand for --const lambda=<v>");
    cmd->add_option("--grid", o.grid, "Per-axis resolution override");
    cmd->add_option("--grid-spec", o.grid_spec, "Full grid: lo:hi:n,lo:hi:n,lo:hi:n");
}

struct PairInput {
    FormPair pair;
    GridSpec grid;
    std::string source;
    std::vector<std::string> warnings;
};

CatalogOverrides overrides_of(const PairOpts& o) {
    CatalogOverrides ov;
    for (const auto& [k, v] : parse_consts(o.consts).values) ov.values[k] = v;
    if (o.lambda_opt && o.lambda_opt->count() > 0) ov.values["lambda"] = o.lambda;
    return ov;
}

PairInput resolve_pair(const PairOpts& o) {
    PairInput in;
    if (!o.catalog.empty()) {
        CatalogObject obj = catalog_get(o.catalog, overrides_of(o));
        if (obj.pair) {
            in.pair = *obj.pair;
        } else if (obj.metric) {
            // e^f dx1 dx2 corresponds to the null-coordinate pair (e^f dx1, dx2)
            in.pair = null_coordinate_pair(obj.metric->f, Expression::constant(0),
                                           obj.metric->constants);
        } else {
            throw lorfol::Error("catalog entry '" + o.catalog + "' carries no defining pair");
        }
        in.grid = obj.default_grid;
        in.source = o.catalog;
        in.warnings = obj.warnings;
    } else {
        if (o.omega1.empty() || o.omega2.empty())
            throw lorfol::Error("provide either --catalog or both --omega1 and --omega2");
        auto names = split(o.chart, ',');
        if (names.size() != 3) throw lorfol::Error("--chart expects three comma-separated names");
        Chart c = Chart::lines(names[0], names[1], names[2]);
        auto coeffs = [&](const std::string& s, const char* flag) {
            auto parts = split(s, ',');
            if (parts.size() != 3)
                throw lorfol::Error(std::string(flag) + " expects three comma-separated expressions");
            return std::array<Expression, 3>{parse_expression(parts[0]), parse_expression(parts[1]),
                                             parse_expression(parts[2])};
        };
        in.pair.omega1 = Form1{c, coeffs(o.omega1, "--omega1")};
        in.pair.omega2 = Form1{c, coeffs(o.omega2, "--omega2")};
        in.pair.constants = parse_consts(o.consts);
        if (o.lambda_opt && o.lambda_opt->count() > 0) in.pair.constants.set("lambda", o.lambda);
        in.grid = GridSpec::cube(-1.0, 1.0, o.grid > 1 ? o.grid : 9);
        in.source = "inline";
    }
    if (!o.grid_spec.empty())
        in.grid = parse_grid_spec(o.grid_spec);
    else
        in.grid = with_resolution(in.grid, o.grid);
    return in;
}

struct MetricOpts {
    std::string catalog;
    std::string f;
    std::vector<std::string> consts;
    double lambda = 0.0;
    CLI::Option* lambda_opt = nullptr;
};

void add_metric_opts(CLI::App* cmd, MetricOpts& o) {
    cmd->add_option("--catalog", o.catalog, "Catalog entry name (null-metric kind)");
    cmd->add_option("--f", o.f, "Conformal factor f(x1,x2) of the metric e^f dx1 dx2");
    cmd->add_option("--const", o.consts, "Named constant binding name=value (repeatable)");
    o.lambda_opt = cmd->add_option("--lambda", o.lambda, "Shorthand for --const lambda=<v>");
}

struct MetricInput {
    NullMetric m;
    std::string source;
    std::array<double, 2> start{0.0, 0.0};  // default initial point
};

MetricInput resolve_metric(const MetricOpts& o) {
    MetricInput in;
    if (!o.catalog.empty()) {
        CatalogOverrides ov;
        for (const auto& [k, v] : parse_consts(o.consts).values) ov.values[k] = v;
        if (o.lambda_opt && o.lambda_opt->count() > 0) ov.values["lambda"] = o.lambda;
        CatalogObject obj = catalog_get(o.catalog, ov);
        if (!obj.metric)
            throw lorfol::Error("catalog entry '" + o.catalog + "' is not a null metric");
        in.m = *obj.metric;
        in.source = o.catalog;
        const auto& ax = obj.default_grid.axes;
        in.start = {0.5 * (ax[0].lo + ax[0].hi), 0.5 * (ax[1].lo + ax[1].hi)};
    } else {
        if (o.f.empty()) throw lorfol::Error("provide either --catalog or --f");
        in.m.f = parse_expression(o.f);
        in.m.constants = parse_consts(o.consts);
        if (o.lambda_opt && o.lambda_opt->count() > 0) in.m.constants.set("lambda", o.lambda);
        in.source = "inline";
    }
    return in;
}

struct SuspOpts {
    std::string catalog;
    std::string matrix;
    std::string speed;
};

void add_susp_opts(CLI::App* cmd, SuspOpts& o) {
    cmd->add_option("--catalog", o.catalog, "Suspension catalog entry (default suspension-A)");
    cmd->add_option("--matrix", o.matrix, "Four integers a,b,c,d of the gluing matrix");
    cmd->add_option("--speed", o.speed, "Local speed DSL expression in p1, p2, s (default 1)");
}

SuspensionFlow resolve_susp(const SuspOpts& o) {
    if (!o.matrix.empty()) {
        auto v = parse_doubles(o.matrix, 4, "--matrix");
        std::array<std::array<long, 2>, 2> a{
            {{static_cast<long>(v[0]), static_cast<long>(v[1])},
             {static_cast<long>(v[2]), static_cast<long>(v[3])}}};
        Expression speed = o.speed.empty() ? Expression::constant(1) : parse_expression(o.speed);
        return SuspensionFlow(a, speed);
    }
    CatalogOverrides ov;
    if (!o.speed.empty()) ov.speed = o.speed;
    CatalogObject obj = catalog_get(o.catalog.empty() ? "suspension-A" : o.catalog, ov);
    if (!obj.flow) throw lorfol::Error("catalog entry is not a suspension");
    return *obj.flow;
}

// ---------------------------------------------------------------------------
// subcommand bodies (each returns the process exit code)

int run_verify(const Common& c, const PairOpts& po, double tol) {
    if (!po.catalog.empty()) {
        // non-pair entries verify through their own residual
        CatalogObject probe = catalog_get(po.catalog, overrides_of(po));
        if (!probe.pair) {
            require_json(c);
            double res = verify_entry(probe, policy_of(c));
            bool pass = res <= tol;
            ordered_json j{{"command", "verify"},
                           {"source", po.catalog},
                           {"kind", to_string(probe.entry.kind)},
                           {"residual", res},
                           {"tolerance", tol},
                           {"warnings", probe.warnings},
                           {"pass", pass}};
            emit(c, render(j));
            return pass ? 0 : 1;
        }
    }
    require_json(c);
    PairInput in = resolve_pair(po);
    VerificationReport r = check_frobenius(in.pair, in.grid, policy_of(c));
    double vol = check_transverse_volume(in.pair, in.grid, policy_of(c));
    double worst = std::max({r.frobenius_residual1, r.frobenius_residual2, vol});
    bool pass = worst <= tol;
    ordered_json j{{"command", "verify"},
                   {"source", in.source},
                   {"grid", grid_json(in.grid)},
                   {"frobenius_residual", {r.frobenius_residual1, r.frobenius_residual2}},
                   {"volume_residual", vol},
                   {"rank_drop_count", r.rank_drop_points.size()},
                   {"tolerance", tol},
                   {"warnings", in.warnings},
                   {"pass", pass}};
    emit(c, render(j));
    return pass ? 0 : 1;
}

std::string csv_of_values(const Chart& chart, const GridSpec& grid,
                          const std::vector<std::string>& cols,
                          const std::function<void(std::size_t, std::vector<double>&)>& fill) {
    std::string out = chart.name(0) + "," + chart.name(1) + "," + chart.name(2);
    for (const auto& h : cols) out += "," + h;
    out += '\n';
    std::vector<double> row;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        auto p = grid.point(i);
        out += fmt17(p[0]) + "," + fmt17(p[1]) + "," + fmt17(p[2]);
        row.clear();
        fill(i, row);
        for (double v : row) out += "," + fmt17(v);
        out += '\n';
    }
    return out;
}

int run_connection(const Common& c, const PairOpts& po, double tol) {
    PairInput in = resolve_pair(po);
    ConnectionForm r = solve_connection(in.pair, in.grid, tol, policy_of(c));
    if (c.format == "csv") {
        const Chart& chart = in.pair.omega1.chart;
        emit(c, csv_of_values(chart, in.grid, {"omega0_1", "omega0_2", "omega0_3"},
                              [&](std::size_t i, std::vector<double>& row) {
                                  row = {r.values[i][0], r.values[i][1], r.values[i][2]};
                              }));
        return 0;
    }
    ordered_json sym;
    if (r.symbolic)
        sym = {r.symbolic->c[0].str(), r.symbolic->c[1].str(), r.symbolic->c[2].str()};
    ordered_json drops = ordered_json::array();
    for (const auto& p : r.rank_drop_points) drops.push_back({p[0], p[1], p[2]});
    bool pass = r.residual <= tol;
    ordered_json j{{"command", "connection"},
                   {"source", in.source},
                   {"grid", grid_json(in.grid)},
                   {"symbolic", sym},
                   {"residual", r.residual},
                   {"rank_drop_points", drops},
                   {"tolerance", tol},
                   {"pass", pass}};
    emit(c, render(j));
    return pass ? 0 : 1;
}

int run_curvature(const Common& c, const PairOpts& po, double tol) {
    PairInput in = resolve_pair(po);
    ConnectionForm conn = solve_connection(in.pair, in.grid, tol, policy_of(c));
    CurvatureField k = curvature(in.pair, conn, in.grid, policy_of(c));
    if (c.format == "csv") {
        emit(c, csv_of_values(in.pair.omega1.chart, in.grid, {"K"},
                              [&](std::size_t i, std::vector<double>& row) {
                                  row = {k.values[i]};
                              }));
        return 0;
    }
    ordered_json closed;
    if (k.closed_form) closed = k.closed_form->str();
    ordered_json j{{"command", "curvature"},
                   {"source", in.source},
                   {"grid", grid_json(in.grid)},
                   {"closed_form", closed},
                   {"min", k.min_value},
                   {"max", k.max_value},
                   {"consistency_residual", k.consistency_residual},
                   {"connection_residual", conn.residual}};
    emit(c, render(j));
    return 0;
}

int run_classify(const Common& c, const PairOpts& po, double tol) {
    require_json(c);
    PairInput in = resolve_pair(po);
    Classification r = classify(in.pair, in.grid, tol, policy_of(c));
    ordered_json j{{"command", "classify"},
                   {"source", in.source},
                   {"grid", grid_json(in.grid)},
                   {"label", to_string(r.label)},
                   {"constant_value", r.constant_value},
                   {"minkowski_residual", r.minkowski_residual},
                   {"desitter_residual", r.desitter_residual},
                   {"spread", r.spread},
                   {"ambiguous", r.ambiguous}};
    emit(c, render(j));
    return 0;
}

ordered_json verdict_json(const CompletenessVerdict& v) {
    ordered_json j;
    j["tag"] = v.tag == CompletenessVerdict::Tag::BlowUp ? "blow-up" : "reached-horizon";
    if (v.tag == CompletenessVerdict::Tag::BlowUp) {
        j["t_star"] = v.t_star;
        j["t_star_uncertainty"] = v.t_star_uncertainty;
    }
    j["steps"] = v.steps;
    j["max_energy_drift"] = v.max_energy_drift;
    return j;
}

int run_geodesic(const Common& c, const MetricOpts& mo, GeodesicState s0, bool start_given,
                 double horizon, const IntegratorOptions& opts) {
    MetricInput in = resolve_metric(mo);
    if (!start_given) {
        s0.x1 = in.start[0];
        s0.x2 = in.start[1];
    }
    IntegrationResult r = integrate(in.m, s0, horizon, opts);
    if (c.format == "csv") {
        std::string out = "t,x1,x2,v1,v2,energy\n";
        for (const TrajectoryPoint& p : r.samples)
            out += fmt17(p.t) + "," + fmt17(p.x1) + "," + fmt17(p.x2) + "," + fmt17(p.v1) + "," +
                   fmt17(p.v2) + "," + fmt17(p.energy) + '\n';
        emit(c, out);
        return 0;
    }
    const TrajectoryPoint& last = r.samples.back();
    ordered_json j{{"command", "geodesic"},
                   {"source", in.source},
                   {"initial", {{"x1", s0.x1}, {"x2", s0.x2}, {"v1", s0.v1}, {"v2", s0.v2}}},
                   {"horizon", horizon},
                   {"verdict", verdict_json(r.verdict)},
                   {"samples", r.samples.size()},
                   {"final",
                    {{"t", last.t},
                     {"x1", last.x1},
                     {"x2", last.x2},
                     {"v1", last.v1},
                     {"v2", last.v2},
                     {"energy", last.energy}}}};
    emit(c, render(j));
    return 0;
}

int run_completeness(const Common& c, const MetricOpts& mo, GeodesicState s0, bool start_given,
                     double v0, double horizon, const std::string& expect,
                     const IntegratorOptions& opts) {
    require_json(c);
    MetricInput in = resolve_metric(mo);
    if (!start_given) {
        s0.x1 = in.start[0];
        s0.x2 = in.start[1];
    }
    if (s0.v1 == 0.0 && s0.v2 == 0.0) s0.v1 = s0.v2 = v0;
    IntegrationResult r = integrate(in.m, s0, horizon, opts);
    bool blew_up = r.verdict.tag == CompletenessVerdict::Tag::BlowUp;
    bool pass = true;
    if (expect == "complete" && blew_up) pass = false;
    if (expect == "incomplete" && !blew_up) pass = false;
    ordered_json j{{"command", "completeness"},
                   {"source", in.source},
                   {"initial", {{"x1", s0.x1}, {"x2", s0.x2}, {"v1", s0.v1}, {"v2", s0.v2}}},
                   {"horizon", horizon},
                   {"verdict", verdict_json(r.verdict)},
                   {"expect", expect.empty() ? ordered_json() : ordered_json(expect)},
                   {"pass", pass}};
    emit(c, render(j));
    return pass ? 0 : 1;
}

int run_cocycle(const Common& c, const SuspOpts& so, const std::string& point, double t,
                int additivity) {
    require_json(c);
    SuspensionFlow f = resolve_susp(so);
    auto p = parse_doubles(point, 3, "--point");
    T3Point x{p[0], p[1], p[2]};
    auto r = f.flow(x, t);
    ordered_json j{{"command", "cocycle"},
                   {"matrix",
                    {{f.matrix()[0][0], f.matrix()[0][1]}, {f.matrix()[1][0], f.matrix()[1][1]}}},
                   {"log_multiplier", f.log_multiplier()},
                   {"point", {x.p1, x.p2, x.s}},
                   {"t", t},
                   {"u", r.u},
                   {"sigma", r.sigma},
                   {"endpoint", {r.point.p1, r.point.p2, r.point.s}}};
    if (additivity > 0) {
        std::mt19937 rng(20240517);
        std::uniform_real_distribution<double> up(0.0, 1.0), ut(-10.0, 10.0);
        double worst = 0.0;
        for (int i = 0; i < additivity; ++i) {
            T3Point y{up(rng), up(rng), up(rng)};
            double a = ut(rng), b = ut(rng);
            auto fa = f.flow(y, a);
            worst = std::max(worst,
                             std::fabs(f.cocycle_u(y, a + b) - (fa.u + f.cocycle_u(fa.point, b))));
        }
        j["additivity_samples"] = additivity;
        j["additivity_residual"] = worst;
    }
    emit(c, render(j));
    return 0;
}

int run_probe_qa(const Common& c, const SuspOpts& so, int samples, double t_max) {
    require_json(c);
    SuspensionFlow f = resolve_susp(so);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> up(0.0, 1.0);
    std::vector<T3Point> pts;
    for (int i = 0; i < samples; ++i) pts.push_back({up(rng), up(rng), up(rng)});
    QuasiAnosovReport r = quasi_anosov_probe(f, pts, t_max);
    ordered_json ws = ordered_json::array();
    for (const QuasiAnosovWitness& w : r.witnesses) {
        ordered_json e{{"point", {w.sample.p1, w.sample.p2, w.sample.s}}};
        e["t_expand"] = w.t_expand ? ordered_json(*w.t_expand) : ordered_json();
        e["t_contract"] = w.t_contract ? ordered_json(*w.t_contract) : ordered_json();
        ws.push_back(e);
    }
    ordered_json j{{"command", "probe-qa"},
                   {"samples", samples},
                   {"t_max", t_max},
                   {"quasi_anosov", r.quasi_anosov},
                   {"T", r.T},
                   {"C", r.C},
                   {"witnesses", ws}};
    emit(c, render(j));
    return r.quasi_anosov ? 0 : 1;
}

int run_bundle_solve(const Common& c, const SuspOpts& so, const std::string& eta, double T, int n,
                     const std::string& side_name, double tol, int max_iter) {
    SuspensionFlow f = resolve_susp(so);
    BundleSide side = side_name == "stable" ? BundleSide::Stable : BundleSide::Unstable;
    BundleGrid grid{n, n, n};
    Expression coeff = eta.empty() ? Expression::constant(0) : parse_expression(eta);
    BundleSolveResult r = strong_bundle_solve(f, coeff, T, grid, tol, max_iter, side, policy_of(c));
    if (c.format == "csv") {
        std::string out = "p1,p2,s,f\n";
        for (std::size_t i = 0; i < grid.size(); ++i) {
            T3Point x = grid.node(i);
            out += fmt17(x.p1) + "," + fmt17(x.p2) + "," + fmt17(x.s) + "," +
                   fmt17(r.candidate.f[i]) + '\n';
        }
        emit(c, out);
        return 0;
    }
    double fmin = r.candidate.f[0], fmax = r.candidate.f[0];
    for (double v : r.candidate.f) {
        fmin = std::min(fmin, v);
        fmax = std::max(fmax, v);
    }
    ordered_json j{{"command", "bundle-solve"},
                   {"side", side == BundleSide::Stable ? "stable" : "unstable"},
                   {"T", r.report.T},
                   {"grid", {grid.n1, grid.n2, grid.n3}},
                   {"a", r.report.a},
                   {"C", r.report.C},
                   {"contraction_rate", r.report.contraction_rate},
                   {"iterations", r.report.iterations},
                   {"f_min", fmin},
                   {"f_max", fmax}};
    emit(c, render(j));
    return 0;
}

EinPoint parse_ein_point(const std::string& point, const std::string& xy) {
    if (!xy.empty()) {
        auto v = parse_doubles(xy, 2, "--xy");
        return embed_psi(v[0], v[1]);
    }
    auto v = parse_doubles(point, 2, "--point");
    return ein_point(v[0], v[1]);
}

ordered_json ein_json(const EinPoint& p) {
    ordered_json j{{"theta", p.theta}, {"phi", p.phi}};
    try {
        auto xy = unembed(p);
        j["x"] = xy[0];
        j["y"] = xy[1];
    } catch (const lorfol::Error&) {
        j["x"] = nullptr;  // on an ideal circle
        j["y"] = nullptr;
    }
    return j;
}

int run_ein_orbit(const Common& c, double lambda, const std::string& point, const std::string& xy,
                  long n, bool n_given, double t, int steps) {
    require_json(c);
    HyperbolicParam h{lambda};
    EinPoint p = parse_ein_point(point, xy);
    ordered_json pts = ordered_json::array();
    if (n_given) {
        long lo = std::min(0L, n), hi = std::max(0L, n);
        for (long k = lo; k <= hi; ++k) {
            ordered_json e = ein_json(fA_apply(h, k, p));
            e["n"] = k;
            pts.push_back(e);
        }
    } else {
        for (int k = 0; k <= steps; ++k) {
            double tk = t * static_cast<double>(k) / static_cast<double>(steps);
            ordered_json e = ein_json(orbit(h, tk, p));
            e["t"] = tk;
            pts.push_back(e);
        }
    }
    ordered_json j{{"command", "einstein orbit"},
                   {"lambda", lambda},
                   {"start", ein_json(p)},
                   {"points", pts}};
    emit(c, render(j));
    return 0;
}

int run_ein_equicont(const Common& c, double lambda, const std::string& point,
                     const std::string& xy, int n_max) {
    require_json(c);
    HyperbolicParam h{lambda};
    EinPoint p = parse_ein_point(point, xy);
    EquicontinuityResult r = equicontinuity_probe(h, p, n_max);
    ordered_json j{{"command", "einstein equicont"},
                   {"lambda", lambda},
                   {"point", ein_json(p)},
                   {"n_max", n_max},
                   {"sup", r.sup},
                   {"n_at_sup", r.n_at_sup},
                   {"sup_doubled", r.sup_doubled},
                   {"equicontinuous", r.equicontinuous}};
    emit(c, render(j));
    return 0;
}

int run_ein_pullback(const Common& c, double lambda, int grid, double pole_margin, int iso_grid,
                     long iso_n, double tol_pullback, double tol_iso) {
    require_json(c);
    double pb = pullback_identity_residual(grid, pole_margin);
    double iso = fA_isometry_residual(HyperbolicParam{lambda}, iso_grid, iso_n);
    bool pass = pb <= tol_pullback && iso <= tol_iso;
    ordered_json j{{"command", "einstein pullback-check"},
                   {"lambda", lambda},
                   {"grid", grid},
                   {"pole_margin", pole_margin},
                   {"pullback_residual", pb},
                   {"isometry_grid", iso_grid},
                   {"isometry_power", iso_n},
                   {"isometry_residual", iso},
                   {"pass", pass}};
    emit(c, render(j));
    return pass ? 0 : 1;
}

ordered_json entry_json(const CatalogEntry& e) {
    ordered_json defs = ordered_json::object();
    for (const auto& [k, v] : e.defaults) defs[k] = v;
    return {{"name", e.name}, {"kind", to_string(e.kind)}, {"note", e.note}, {"defaults", defs}};
}

int run_catalog_list(const Common& c) {
    require_json(c);
    ordered_json entries = ordered_json::array();
    for (const CatalogEntry& e : catalog_list()) entries.push_back(entry_json(e));
    emit(c, render(ordered_json{{"command", "catalog list"}, {"entries", entries}}));
    return 0;
}

ordered_json form1_json(const Form1& f) {
    return {f.c[0].str(), f.c[1].str(), f.c[2].str()};
}

int run_catalog_get(const Common& c, const std::string& name, const PairOpts& po,
                    const std::string& speed) {
    require_json(c);
    CatalogOverrides ov = overrides_of(po);
    if (!speed.empty()) ov.speed = speed;
    CatalogObject obj = catalog_get(name, ov);
    ordered_json j{{"command", "catalog get"}, {"entry", entry_json(obj.entry)}};
    if (obj.pair) {
        ordered_json p{{"omega1", form1_json(obj.pair->omega1)},
                       {"omega2", form1_json(obj.pair->omega2)}};
        if (obj.pair->connection_hint)
            p["connection_hint"] = form1_json(*obj.pair->connection_hint);
        ordered_json consts = ordered_json::object();
        for (const auto& [k, v] : obj.pair->constants.values) consts[k] = v;
        p["constants"] = consts;
        j["pair"] = p;
    }
    if (obj.single_form) j["form"] = form1_json(*obj.single_form);
    if (obj.metric) {
        ordered_json m{{"f", obj.metric->f.str()}, {"x1", obj.metric->x1}, {"x2", obj.metric->x2}};
        if (obj.metric->deck)
            m["deck"] = {{"s1", obj.metric->deck->s1},
                         {"o1", obj.metric->deck->o1},
                         {"s2", obj.metric->deck->s2},
                         {"o2", obj.metric->deck->o2}};
        j["metric"] = m;
    }
    if (obj.flow) {
        j["flow"] = {{"matrix",
                      {{obj.flow->matrix()[0][0], obj.flow->matrix()[0][1]},
                       {obj.flow->matrix()[1][0], obj.flow->matrix()[1][1]}}},
                     {"multiplier", obj.flow->multiplier()},
                     {"log_multiplier", obj.flow->log_multiplier()}};
    }
    j["default_grid"] = grid_json(obj.default_grid);
    j["warnings"] = obj.warnings;
    emit(c, render(j));
    return 0;
}

int run_export_grid(const Common& c, const std::string& expr, const std::string& chart_names,
                    const std::string& grid_spec, int grid_n,
                    const std::vector<std::string>& consts) {
    if (expr.empty()) throw lorfol::Error("--expr is required");
    auto names = split(chart_names, ',');
    if (names.size() != 3) throw lorfol::Error("--chart expects three comma-separated names");
    Chart chart = Chart::lines(names[0], names[1], names[2]);
    Expression e = parse_expression(expr);
    Bindings b = parse_consts(consts);
    GridSpec g = grid_spec.empty() ? GridSpec::cube(-1.0, 1.0, grid_n > 1 ? grid_n : 9)
                                   : parse_grid_spec(grid_spec);
    std::vector<double> values(g.size());
    for (std::size_t i = 0; i < g.size(); ++i)
        values[i] = e.evaluate(bind_point(chart, g.point(i), b));
    if (c.format == "csv") {
        emit(c, csv_of_values(chart, g, {"value"}, [&](std::size_t i, std::vector<double>& row) {
                 row = {values[i]};
             }));
        return 0;
    }
    ordered_json j{{"command", "export-grid"},
                   {"expr", e.str()},
                   {"chart", {names[0], names[1], names[2]}},
                   {"grid", grid_json(g)},
                   {"values", values}};
    emit(c, render(j));
    return 0;
}

// ---------------------------------------------------------------------------
// --config: merge JSON keys as trailing long options (flags win)

std::vector<std::string> merge_config(std::vector<std::string> args) {
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (path.empty()) return args;
    std::ifstream in(path);
    if (!in) throw lorfol::Error("cannot open config file '" + path + "'");
    nlohmann::json cfg;
    try {
        in >> cfg;
    } catch (const nlohmann::json::exception& e) {
        throw lorfol::Error("config file '" + path + "': " + e.what());
    }
    if (!cfg.is_object()) throw lorfol::Error("config file must hold a JSON object");
    for (const auto& [key, value] : cfg.items()) {
        std::string flag = "--" + key;
        bool present = false;
        for (const std::string& a : args)
            if (a == flag || a.rfind(flag + "=", 0) == 0) present = true;
        if (present) continue;  // command-line flags win
        if (value.is_boolean()) {
            if (value.get<bool>()) args.push_back(flag);
        } else if (value.is_string()) {
            args.push_back(flag + "=" + value.get<std::string>());
        } else if (value.is_number_integer()) {
            args.push_back(flag + "=" + std::to_string(value.get<long long>()));
        } else if (value.is_number_float()) {
            args.push_back(flag + "=" + fmt17(value.get<double>()));
        } else if (value.is_array()) {
            for (const auto& item : value)
                args.push_back(flag + "=" +
                               (item.is_string() ? item.get<std::string>() : item.dump()));
        } else {
            throw lorfol::Error("config key '" + key + "' has an unsupported value type");
        }
    }
    return args;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"transversely Lorentzian foliation toolkit"};
    app.require_subcommand(1);

    Common common;
    double tol = 1e-8;

    // verify / connection / curvature / classify share the pair source
    PairOpts pair_verify, pair_conn, pair_curv, pair_cls;
    auto* cmd_verify = app.add_subcommand("verify", "Frobenius + transverse volume check");
    add_common(cmd_verify, common);
    add_pair_opts(cmd_verify, pair_verify);
    cmd_verify->add_option("--tol", tol, "Pass/fail residual tolerance");

    auto* cmd_conn = app.add_subcommand("connection", "Solve for the connection form omega0");
    add_common(cmd_conn, common);
    add_pair_opts(cmd_conn, pair_conn);
    double tol_conn = 1e-6;
    cmd_conn->add_option("--tol", tol_conn, "Substitution residual tolerance");

    auto* cmd_curv = app.add_subcommand("curvature", "Transverse curvature K");
    add_common(cmd_curv, common);
    add_pair_opts(cmd_curv, pair_curv);
    double tol_curv = 1e-6;
    cmd_curv->add_option("--tol", tol_curv, "Connection residual tolerance");

    auto* cmd_cls = app.add_subcommand("classify", "Flat / de Sitter / constant / nonconstant");
    add_common(cmd_cls, common);
    add_pair_opts(cmd_cls, pair_cls);
    double tol_cls = 1e-6;
    cmd_cls->add_option("--tol", tol_cls, "Classification tolerance");

    // geodesic / completeness share the metric source
    MetricOpts met_geo, met_comp;
    GeodesicState state{};
    double horizon = 100.0, v0 = 1.0;
    std::string expect;
    IntegratorOptions iopts;
    auto add_state = [&](CLI::App* cmd) {
        std::vector<CLI::Option*> given;
        given.push_back(cmd->add_option("--x1", state.x1, "Initial x1"));
        given.push_back(cmd->add_option("--x2", state.x2, "Initial x2"));
        cmd->add_option("--v1", state.v1, "Initial v1");
        cmd->add_option("--v2", state.v2, "Initial v2");
        cmd->add_option("--horizon", horizon, "Affine-parameter horizon");
        cmd->add_option("--rel-tol", iopts.rel_tol, "Integrator relative tolerance");
        cmd->add_option("--abs-tol", iopts.abs_tol, "Integrator absolute tolerance");
        return given;
    };

    auto* cmd_geo = app.add_subcommand("geodesic", "Integrate a null-coordinate geodesic");
    add_common(cmd_geo, common);
    add_metric_opts(cmd_geo, met_geo);
    auto geo_pos = add_state(cmd_geo);
    cmd_geo->add_option("--stride", iopts.sample_stride, "Keep every k-th accepted step");

    auto* cmd_comp = app.add_subcommand("completeness", "Blow-up probe of the transverse metric");
    add_common(cmd_comp, common);
    add_metric_opts(cmd_comp, met_comp);
    auto comp_pos = add_state(cmd_comp);
    cmd_comp->add_option("--v0", v0, "Initial null speed (sets v1 = v2 = v0 unless given)");
    cmd_comp->add_option("--expect", expect, "Assert the outcome: complete or incomplete")
        ->check(CLI::IsMember({"complete", "incomplete"}));

    // suspension-based subcommands
    SuspOpts susp_coc, susp_qa, susp_bun;
    std::string coc_point = "0.2,0.5,0";
    double coc_t = 1.0;
    int coc_add = 0;
    auto* cmd_coc = app.add_subcommand("cocycle", "Deformation cocycle u(x, t)");
    add_common(cmd_coc, common);
    add_susp_opts(cmd_coc, susp_coc);
    cmd_coc->add_option("--point", coc_point, "Start point p1,p2,s");
    cmd_coc->add_option("--t", coc_t, "Flow time");
    cmd_coc->add_option("--check-additivity", coc_add, "Random additivity triples to test");

    int qa_samples = 8;
    double qa_tmax = 10.0;
    auto* cmd_qa = app.add_subcommand("probe-qa", "Quasi-Anosov witness probe");
    add_common(cmd_qa, common);
    add_susp_opts(cmd_qa, susp_qa);
    cmd_qa->add_option("--samples", qa_samples, "Number of random sample points");
    cmd_qa->add_option("--t-max", qa_tmax, "Witness search bound");

    std::string bun_eta, bun_side = "unstable";
    double bun_T = 1.0, bun_tol = 1e-10;
    int bun_n = 16, bun_iter = 200;
    auto* cmd_bun = app.add_subcommand("bundle-solve", "Strong-bundle graph-transform solver");
    add_common(cmd_bun, common);
    add_susp_opts(cmd_bun, susp_bun);
    cmd_bun->add_option("--eta", bun_eta, "Flow coefficient c_X of eta (DSL, default 0)");
    cmd_bun->add_option("--T", bun_T, "Contraction time");
    cmd_bun->add_option("--bundle-grid", bun_n, "Nodes per axis");
    cmd_bun->add_option("--side", bun_side, "unstable or stable")
        ->check(CLI::IsMember({"unstable", "stable"}));
    cmd_bun->add_option("--tol", bun_tol, "Fixed-point sup-norm tolerance");
    cmd_bun->add_option("--max-iter", bun_iter, "Iteration cap");

    // einstein
    auto* cmd_ein = app.add_subcommand("einstein", "Einstein torus computations");
    cmd_ein->require_subcommand(1);
    double ein_lambda = 2.0;
    std::string ein_point_s = "0,0", ein_xy;
    long ein_n = 1;
    double ein_t = 1.0;
    int ein_steps = 1, ein_nmax = 10, ein_grid = 50, ein_iso_grid = 40;
    long ein_iso_n = 1;
    double ein_margin = 0.1, ein_tol_pb = 1e-10, ein_tol_iso = 1e-12;

    auto* cmd_orb = cmd_ein->add_subcommand("orbit", "Hyperbolic one-parameter orbit / powers");
    add_common(cmd_orb, common);
    cmd_orb->add_option("--lambda", ein_lambda, "Multiplier of the chart action");
    cmd_orb->add_option("--point", ein_point_s, "Angles theta,phi");
    cmd_orb->add_option("--xy", ein_xy, "Chart point x,y (overrides --point)");
    auto* opt_n = cmd_orb->add_option("--n", ein_n, "Emit f_A^k for k between 0 and n");
    cmd_orb->add_option("--t", ein_t, "Orbit time (used when --n is absent)");
    cmd_orb->add_option("--steps", ein_steps, "Samples along [0, t]");

    auto* cmd_equi = cmd_ein->add_subcommand("equicont", "Derivative-growth probe");
    add_common(cmd_equi, common);
    cmd_equi->add_option("--lambda", ein_lambda, "Multiplier of the chart action");
    cmd_equi->add_option("--point", ein_point_s, "Angles theta,phi");
    cmd_equi->add_option("--xy", ein_xy, "Chart point x,y (overrides --point)");
    cmd_equi->add_option("--n-max", ein_nmax, "Power bound N");

    auto* cmd_pb = cmd_ein->add_subcommand("pullback-check", "Metric pullback identities");
    add_common(cmd_pb, common);
    cmd_pb->add_option("--lambda", ein_lambda, "Multiplier of the chart action");
    cmd_pb->add_option("--grid", ein_grid, "Angle grid for the embedding identity");
    cmd_pb->add_option("--pole-margin", ein_margin, "Skip margin around the ideal circles");
    cmd_pb->add_option("--iso-grid", ein_iso_grid, "Angle grid for the isometry residual");
    cmd_pb->add_option("--iso-n", ein_iso_n, "Power of f_A tested");
    cmd_pb->add_option("--tol", ein_tol_pb, "Pullback residual tolerance");
    cmd_pb->add_option("--iso-tol", ein_tol_iso, "Isometry residual tolerance");

    // catalog
    auto* cmd_cat = app.add_subcommand("catalog", "Named example catalog");
    cmd_cat->require_subcommand(1);
    auto* cmd_list = cmd_cat->add_subcommand("list", "List entries");
    add_common(cmd_list, common);
    auto* cmd_get = cmd_cat->add_subcommand("get", "Describe one entry");
    add_common(cmd_get, common);
    std::string get_name, get_speed;
    PairOpts get_opts;
    cmd_get->add_option("name", get_name, "Entry name")->required();
    cmd_get->add_option("--const", get_opts.consts, "Parameter override name=value");
    get_opts.lambda_opt = cmd_get->add_option("--lambda", get_opts.lambda, "Lambda override");
    cmd_get->add_option("--speed", get_speed, "Suspension speed override (DSL)");

    // export-grid
    std::string ex_expr, ex_chart = "x,y,z", ex_grid_spec;
    int ex_grid = 9;
    std::vector<std::string> ex_consts;
    auto* cmd_ex = app.add_subcommand("export-grid", "Evaluate a DSL expression over a grid");
    add_common(cmd_ex, common);
    cmd_ex->add_option("--expr", ex_expr, "DSL expression");
    cmd_ex->add_option("--chart", ex_chart, "Coordinate names (default x,y,z)");
    cmd_ex->add_option("--grid", ex_grid, "Cube resolution on [-1,1]^3");
    cmd_ex->add_option("--grid-spec", ex_grid_spec, "Full grid: lo:hi:n,lo:hi:n,lo:hi:n");
    cmd_ex->add_option("--const", ex_consts, "Named constant binding name=value");

    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        args = merge_config(args);
        std::reverse(args.begin(), args.end());
        app.parse(args);

        apply_threads(common);
        auto start_given = [](const std::vector<CLI::Option*>& opts) {
            for (const CLI::Option* o : opts)
                if (o->count() > 0) return true;
            return false;
        };

        if (*cmd_verify) return run_verify(common, pair_verify, tol);
        if (*cmd_conn) return run_connection(common, pair_conn, tol_conn);
        if (*cmd_curv) return run_curvature(common, pair_curv, tol_curv);
        if (*cmd_cls) return run_classify(common, pair_cls, tol_cls);
        if (*cmd_geo) return run_geodesic(common, met_geo, state, start_given(geo_pos), horizon, iopts);
        if (*cmd_comp)
            return run_completeness(common, met_comp, state, start_given(comp_pos), v0, horizon,
                                    expect, iopts);
        if (*cmd_coc) return run_cocycle(common, susp_coc, coc_point, coc_t, coc_add);
        if (*cmd_qa) return run_probe_qa(common, susp_qa, qa_samples, qa_tmax);
        if (*cmd_bun)
            return run_bundle_solve(common, susp_bun, bun_eta, bun_T, bun_n, bun_side, bun_tol,
                                    bun_iter);
        if (*cmd_orb)
            return run_ein_orbit(common, ein_lambda, ein_point_s, ein_xy, ein_n, opt_n->count() > 0,
                                 ein_t, ein_steps);
        if (*cmd_equi) return run_ein_equicont(common, ein_lambda, ein_point_s, ein_xy, ein_nmax);
        if (*cmd_pb)
            return run_ein_pullback(common, ein_lambda, ein_grid, ein_margin, ein_iso_grid,
                                    ein_iso_n, ein_tol_pb, ein_tol_iso);
        if (*cmd_list) return run_catalog_list(common);
        if (*cmd_get) return run_catalog_get(common, get_name, get_opts, get_speed);
        if (*cmd_ex)
            return run_export_grid(common, ex_expr, ex_chart, ex_grid_spec, ex_grid, ex_consts);
        std::cerr << "no subcommand selected\n";
        return 2;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const NumericFailure& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const lorfol::ParseError& e) {
        std::cerr << "parse error at offset " << e.offset() << " (expected " << e.expected()
                  << "): " << e.what() << '\n';
        return 2;
    } catch (const lorfol::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
