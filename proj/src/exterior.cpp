#include "lorfol/exterior.hpp"

namespace lorfol {

Chart Chart::lines(const std::string& c1, const std::string& c2, const std::string& c3) {
    Chart ch;
    ch.coords[0] = {c1, Topology::Line, 0.0};
    ch.coords[1] = {c2, Topology::Line, 0.0};
    ch.coords[2] = {c3, Topology::Line, 0.0};
    return ch;
}

bool Chart::same_coords(const Chart& other) const {
    for (std::size_t i = 0; i < 3; ++i)
        if (coords[i].name != other.coords[i].name) return false;
    return true;
}

namespace {
void require_same_chart(const Chart& a, const Chart& b) {
    if (!a.same_coords(b))
        throw ChartMismatch("forms live on different charts: (" + a.coords[0].name + "," +
                            a.coords[1].name + "," + a.coords[2].name + ") vs (" +
                            b.coords[0].name + "," + b.coords[1].name + "," + b.coords[2].name +
                            ")");
}
}  // namespace

Form2 wedge11(const Form1& a, const Form1& b) {
    require_same_chart(a.chart, b.chart);
    return Form2{a.chart,
                 {a.c[0] * b.c[1] - a.c[1] * b.c[0],
                  a.c[0] * b.c[2] - a.c[2] * b.c[0],
                  a.c[1] * b.c[2] - a.c[2] * b.c[1]}};
}

Form3 wedge12(const Form1& a, const Form2& b) {
    require_same_chart(a.chart, b.chart);
    // dc1^(dc2^dc3) = +, dc2^(dc1^dc3) = -, dc3^(dc1^dc2) = +
    return Form3{a.chart, a.c[0] * b.c[2] - a.c[1] * b.c[1] + a.c[2] * b.c[0]};
}

Form2 d1(const Form1& a) {
    const auto& n = a.chart;
    auto d = [&](int i, int j) {  // d_i a_j
        return a.c[static_cast<std::size_t>(j)].differentiate(n.name(i));
    };
    return Form2{a.chart, {d(0, 1) - d(1, 0), d(0, 2) - d(2, 0), d(1, 2) - d(2, 1)}};
}

Form3 d2(const Form2& a) {
    const auto& n = a.chart;
    Expression w = a.c[0].differentiate(n.name(2)) - a.c[1].differentiate(n.name(1)) +
                   a.c[2].differentiate(n.name(0));
    return Form3{a.chart, w.simplify()};
}

Expression interior1(const VectorField& x, const Form1& a) {
    require_same_chart(x.chart, a.chart);
    return (a.c[0] * x.c[0] + a.c[1] * x.c[1] + a.c[2] * x.c[2]).simplify();
}

Form1 interior2(const VectorField& x, const Form2& a) {
    require_same_chart(x.chart, a.chart);
    // i_X(dc1^dc2) = X1 dc2 - X2 dc1, etc.
    return Form1{a.chart,
                 {(Expression() - a.c[0] * x.c[1] - a.c[1] * x.c[2]).simplify(),
                  (a.c[0] * x.c[0] - a.c[2] * x.c[2]).simplify(),
                  (a.c[1] * x.c[0] + a.c[2] * x.c[1]).simplify()}};
}

Form2 interior3(const VectorField& x, const Form3& a) {
    require_same_chart(x.chart, a.chart);
    // i_X(dc1^dc2^dc3) = X1 dc2^dc3 - X2 dc1^dc3 + X3 dc1^dc2
    return Form2{a.chart,
                 {(a.c * x.c[2]).simplify(), (Expression() - a.c * x.c[1]).simplify(),
                  (a.c * x.c[0]).simplify()}};
}

Form2 lie2(const VectorField& x, const Form2& a) {
    Form2 t1 = interior3(x, d2(a));
    Form2 t2 = d1(interior2(x, a));
    return Form2{a.chart,
                 {(t1.c[0] + t2.c[0]).simplify(), (t1.c[1] + t2.c[1]).simplify(),
                  (t1.c[2] + t2.c[2]).simplify()}};
}

VectorField kernel_field(const Form1& a, const Form1& b) {
    require_same_chart(a.chart, b.chart);
    return VectorField{a.chart,
                       {(a.c[1] * b.c[2] - a.c[2] * b.c[1]).simplify(),
                        (a.c[2] * b.c[0] - a.c[0] * b.c[2]).simplify(),
                        (a.c[0] * b.c[1] - a.c[1] * b.c[0]).simplify()}};
}

std::array<double, 3> evaluate(const Form1& a, const Bindings& b) {
    return {a.c[0].evaluate(b), a.c[1].evaluate(b), a.c[2].evaluate(b)};
}
std::array<double, 3> evaluate(const Form2& a, const Bindings& b) {
    return {a.c[0].evaluate(b), a.c[1].evaluate(b), a.c[2].evaluate(b)};
}
double evaluate(const Form3& a, const Bindings& b) { return a.c.evaluate(b); }
std::array<double, 3> evaluate(const VectorField& a, const Bindings& b) {
    return {a.c[0].evaluate(b), a.c[1].evaluate(b), a.c[2].evaluate(b)};
}

Form1 simplify(const Form1& a) {
    return Form1{a.chart, {a.c[0].simplify(), a.c[1].simplify(), a.c[2].simplify()}};
}
Form2 simplify(const Form2& a) {
    return Form2{a.chart, {a.c[0].simplify(), a.c[1].simplify(), a.c[2].simplify()}};
}

}  // namespace lorfol
