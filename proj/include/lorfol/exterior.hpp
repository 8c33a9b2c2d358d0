#pragma once

#include <array>
#include <optional>
#include <string>

#include "lorfol/expr.hpp"

namespace lorfol {

enum class Topology { Line, Circle };

struct Coordinate {
    std::string name;
    Topology topology = Topology::Line;
    double period = 0.0;  // meaningful for Circle only
};

/// Invertible affine deck transformation c_i -> scale_i * c_i + offset_i.
struct DeckMap {
    std::array<double, 3> scale{1.0, 1.0, 1.0};
    std::array<double, 3> offset{0.0, 0.0, 0.0};
};

/// A 3-dimensional coordinate chart, optionally with a deck transformation
/// generating a discrete quotient.
struct Chart {
    std::array<Coordinate, 3> coords;
    std::optional<DeckMap> deck;

    static Chart lines(const std::string& c1, const std::string& c2, const std::string& c3);
    const std::string& name(int i) const { return coords[static_cast<std::size_t>(i)].name; }
    bool same_coords(const Chart& other) const;
};

class ChartMismatch : public Error {
public:
    using Error::Error;
};

/// 1-form a1 dc1 + a2 dc2 + a3 dc3.
struct Form1 {
    Chart chart;
    std::array<Expression, 3> c;
};

/// 2-form in the ordered basis (dc1^dc2, dc1^dc3, dc2^dc3).
struct Form2 {
    Chart chart;
    std::array<Expression, 3> c;
};

/// 3-form w dc1^dc2^dc3.
struct Form3 {
    Chart chart;
    Expression c;
};

struct VectorField {
    Chart chart;
    std::array<Expression, 3> c;
};

Form2 wedge11(const Form1& a, const Form1& b);
Form3 wedge12(const Form1& a, const Form2& b);

Form2 d1(const Form1& a);
Form3 d2(const Form2& a);

Expression interior1(const VectorField& x, const Form1& a);
Form1 interior2(const VectorField& x, const Form2& a);
Form2 interior3(const VectorField& x, const Form3& a);

/// Lie derivative of a 2-form by Cartan's formula L_X = i_X d + d i_X.
Form2 lie2(const VectorField& x, const Form2& a);

/// Componentwise cross product of the coefficient triples; annihilated by
/// both forms, vanishes exactly where the pair drops rank.
VectorField kernel_field(const Form1& a, const Form1& b);

std::array<double, 3> evaluate(const Form1& a, const Bindings& b);
std::array<double, 3> evaluate(const Form2& a, const Bindings& b);
double evaluate(const Form3& a, const Bindings& b);
std::array<double, 3> evaluate(const VectorField& a, const Bindings& b);

Form1 simplify(const Form1& a);
Form2 simplify(const Form2& a);

}  // namespace lorfol
