#pragma once

#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lorfol {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Syntax error with the byte offset of the offending token.
class ParseError : public Error {
public:
    ParseError(std::string message, std::size_t offset, std::string expected)
        : Error(std::move(message)), offset_(offset), expected_(std::move(expected)) {}
    std::size_t offset() const { return offset_; }
    const std::string& expected() const { return expected_; }

private:
    std::size_t offset_;
    std::string expected_;
};

/// Unbound name or domain error, carrying the printed offending subexpression.
class EvalError : public Error {
public:
    EvalError(std::string message, std::string subexpr)
        : Error(std::move(message)), subexpr_(std::move(subexpr)) {}
    const std::string& subexpr() const { return subexpr_; }

private:
    std::string subexpr_;
};

/// Values for variables and user-bound named constants. `pi` is builtin.
struct Bindings {
    std::map<std::string, double> values;

    Bindings() = default;
    Bindings(std::initializer_list<std::pair<const std::string, double>> init) : values(init) {}

    Bindings& set(const std::string& name, double v) {
        values[name] = v;
        return *this;
    }
    Bindings merged(const Bindings& other) const {
        Bindings out = *this;
        for (const auto& [k, v] : other.values) out.values[k] = v;
        return out;
    }
};

enum class FuncKind { Sin, Cos, Tan, Exp, Ln, Arctan, Sinh, Cosh, Sqrt, Abs, Sign };

/// Immutable scalar expression tree over named coordinates and constants.
/// All operations are pure; sharing subtrees across threads is safe.
class Expression {
public:
    Expression();  // the constant 0

    static Expression constant(double v);
    static Expression name(const std::string& n);  // variable or named constant

    Expression operator-() const;
    Expression operator+(const Expression& rhs) const;
    Expression operator-(const Expression& rhs) const;
    Expression operator*(const Expression& rhs) const;
    Expression operator/(const Expression& rhs) const;
    Expression pow(const Expression& exponent) const;

    static Expression apply(FuncKind f, const Expression& arg);

    double evaluate(const Bindings& b) const;
    Expression differentiate(const std::string& var) const;
    Expression simplify() const;

    /// Canonical printed form; re-parses to a structurally equal tree.
    std::string str() const;

    bool structurally_equal(const Expression& other) const;
    bool is_constant_zero() const;
    void collect_free_names(std::set<std::string>& out) const;

    struct Node;
    using NodePtr = std::shared_ptr<const Node>;
    explicit Expression(NodePtr n) : root_(std::move(n)) {}
    const NodePtr& root() const { return root_; }

private:
    NodePtr root_;
};

Expression sin(const Expression& e);
Expression cos(const Expression& e);
Expression tan(const Expression& e);
Expression exp(const Expression& e);
Expression ln(const Expression& e);
Expression arctan(const Expression& e);
Expression sinh(const Expression& e);
Expression cosh(const Expression& e);
Expression sqrt(const Expression& e);
Expression abs(const Expression& e);

/// Parses the expression DSL (see docs/grammar.md).
/// Precedence ^ > unary - > *,/ > +,-; ^ is right-associative.
Expression parse_expression(std::string_view text);

}  // namespace lorfol
