#include "lorfol/expr.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <vector>

namespace lorfol {

enum class NodeKind { Constant, Name, Neg, Add, Sub, Mul, Div, Pow, Func };

struct Expression::Node {
    NodeKind kind;
    double value = 0.0;          // Constant
    std::string name;            // Name
    FuncKind func = FuncKind::Sin;
    NodePtr a, b;                // children

    static NodePtr make_constant(double v) {
        auto n = std::make_shared<Node>();
        n->kind = NodeKind::Constant;
        n->value = v;
        return n;
    }
    static NodePtr make_name(std::string s) {
        auto n = std::make_shared<Node>();
        n->kind = NodeKind::Name;
        n->name = std::move(s);
        return n;
    }
    static NodePtr make_unary(NodeKind k, NodePtr a) {
        auto n = std::make_shared<Node>();
        n->kind = k;
        n->a = std::move(a);
        return n;
    }
    static NodePtr make_binary(NodeKind k, NodePtr a, NodePtr b) {
        auto n = std::make_shared<Node>();
        n->kind = k;
        n->a = std::move(a);
        n->b = std::move(b);
        return n;
    }
    static NodePtr make_func(FuncKind f, NodePtr a) {
        auto n = std::make_shared<Node>();
        n->kind = NodeKind::Func;
        n->func = f;
        n->a = std::move(a);
        return n;
    }
};

using Node = Expression::Node;
using NodePtr = Expression::NodePtr;

Expression::Expression() : root_(Node::make_constant(0.0)) {}
Expression Expression::constant(double v) { return Expression(Node::make_constant(v)); }
Expression Expression::name(const std::string& n) { return Expression(Node::make_name(n)); }

Expression Expression::operator-() const { return Expression(Node::make_unary(NodeKind::Neg, root_)); }
Expression Expression::operator+(const Expression& r) const {
    return Expression(Node::make_binary(NodeKind::Add, root_, r.root_));
}
Expression Expression::operator-(const Expression& r) const {
    return Expression(Node::make_binary(NodeKind::Sub, root_, r.root_));
}
Expression Expression::operator*(const Expression& r) const {
    return Expression(Node::make_binary(NodeKind::Mul, root_, r.root_));
}
Expression Expression::operator/(const Expression& r) const {
    return Expression(Node::make_binary(NodeKind::Div, root_, r.root_));
}
Expression Expression::pow(const Expression& e) const {
    return Expression(Node::make_binary(NodeKind::Pow, root_, e.root_));
}
Expression Expression::apply(FuncKind f, const Expression& a) {
    return Expression(Node::make_func(f, a.root_));
}

Expression sin(const Expression& e) { return Expression::apply(FuncKind::Sin, e); }
Expression cos(const Expression& e) { return Expression::apply(FuncKind::Cos, e); }
Expression tan(const Expression& e) { return Expression::apply(FuncKind::Tan, e); }
Expression exp(const Expression& e) { return Expression::apply(FuncKind::Exp, e); }
Expression ln(const Expression& e) { return Expression::apply(FuncKind::Ln, e); }
Expression arctan(const Expression& e) { return Expression::apply(FuncKind::Arctan, e); }
Expression sinh(const Expression& e) { return Expression::apply(FuncKind::Sinh, e); }
Expression cosh(const Expression& e) { return Expression::apply(FuncKind::Cosh, e); }
Expression sqrt(const Expression& e) { return Expression::apply(FuncKind::Sqrt, e); }
Expression abs(const Expression& e) { return Expression::apply(FuncKind::Abs, e); }

namespace {

const std::array<std::pair<const char*, FuncKind>, 11> kFuncNames = {{
    {"sin", FuncKind::Sin},
    {"cos", FuncKind::Cos},
    {"tan", FuncKind::Tan},
    {"exp", FuncKind::Exp},
    {"ln", FuncKind::Ln},
    {"arctan", FuncKind::Arctan},
    {"sinh", FuncKind::Sinh},
    {"cosh", FuncKind::Cosh},
    {"sqrt", FuncKind::Sqrt},
    {"abs", FuncKind::Abs},
    {"sign", FuncKind::Sign},
}};

const char* func_name(FuncKind f) {
    for (const auto& [n, k] : kFuncNames)
        if (k == f) return n;
    return "?";
}

bool builtin_constant(const std::string& name, double& out) {
    if (name == "pi") {
        out = 3.14159265358979323846;
        return true;
    }
    return false;
}

std::string print_node(const Node& n);

double eval_node(const Node& n, const Bindings& b) {
    switch (n.kind) {
        case NodeKind::Constant:
            return n.value;
        case NodeKind::Name: {
            double v;
            if (builtin_constant(n.name, v)) return v;
            auto it = b.values.find(n.name);
            if (it == b.values.end()) throw EvalError("unbound name: " + n.name, n.name);
            return it->second;
        }
        case NodeKind::Neg:
            return -eval_node(*n.a, b);
        case NodeKind::Add:
            return eval_node(*n.a, b) + eval_node(*n.b, b);
        case NodeKind::Sub:
            return eval_node(*n.a, b) - eval_node(*n.b, b);
        case NodeKind::Mul:
            return eval_node(*n.a, b) * eval_node(*n.b, b);
        case NodeKind::Div: {
            double den = eval_node(*n.b, b);
            if (den == 0.0) throw EvalError("division by zero", print_node(n));
            return eval_node(*n.a, b) / den;
        }
        case NodeKind::Pow:
            return std::pow(eval_node(*n.a, b), eval_node(*n.b, b));
        case NodeKind::Func: {
            double x = eval_node(*n.a, b);
            switch (n.func) {
                case FuncKind::Sin: return std::sin(x);
                case FuncKind::Cos: return std::cos(x);
                case FuncKind::Tan: return std::tan(x);
                case FuncKind::Exp: return std::exp(x);
                case FuncKind::Ln:
                    if (x <= 0.0) throw EvalError("ln of non-positive argument", print_node(n));
                    return std::log(x);
                case FuncKind::Arctan: return std::atan(x);
                case FuncKind::Sinh: return std::sinh(x);
                case FuncKind::Cosh: return std::cosh(x);
                case FuncKind::Sqrt:
                    if (x < 0.0) throw EvalError("sqrt of negative argument", print_node(n));
                    return std::sqrt(x);
                case FuncKind::Abs: return std::fabs(x);
                case FuncKind::Sign: return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
            }
            return 0.0;
        }
    }
    return 0.0;
}

bool is_const(const NodePtr& n, double v) { return n->kind == NodeKind::Constant && n->value == v; }

NodePtr simplify_node(const NodePtr& p) {
    switch (p->kind) {
        case NodeKind::Constant:
        case NodeKind::Name:
            return p;
        case NodeKind::Neg: {
            NodePtr a = simplify_node(p->a);
            if (a->kind == NodeKind::Constant) return Node::make_constant(-a->value);
            if (a->kind == NodeKind::Neg) return a->a;
            return Node::make_unary(NodeKind::Neg, a);
        }
        case NodeKind::Func: {
            NodePtr a = simplify_node(p->a);
            if (a->kind == NodeKind::Constant) {
                try {
                    Bindings none;
                    double v = eval_node(*Node::make_func(p->func, a), none);
                    if (std::isfinite(v)) return Node::make_constant(v);
                } catch (const EvalError&) {
                    // keep symbolic, evaluation will report the domain error
                }
            }
            return Node::make_func(p->func, a);
        }
        default:
            break;
    }
    NodePtr a = simplify_node(p->a);
    NodePtr b = simplify_node(p->b);
    if (a->kind == NodeKind::Constant && b->kind == NodeKind::Constant) {
        try {
            Bindings none;
            double v = eval_node(*Node::make_binary(p->kind, a, b), none);
            if (std::isfinite(v)) return Node::make_constant(v);
        } catch (const EvalError&) {
        }
    }
    switch (p->kind) {
        case NodeKind::Add:
            if (is_const(a, 0.0)) return b;
            if (is_const(b, 0.0)) return a;
            break;
        case NodeKind::Sub:
            if (is_const(b, 0.0)) return a;
            if (is_const(a, 0.0)) return simplify_node(Node::make_unary(NodeKind::Neg, b));
            break;
        case NodeKind::Mul:
            if (is_const(a, 0.0) || is_const(b, 0.0)) return Node::make_constant(0.0);
            if (is_const(a, 1.0)) return b;
            if (is_const(b, 1.0)) return a;
            break;
        case NodeKind::Div:
            if (is_const(a, 0.0)) return Node::make_constant(0.0);
            if (is_const(b, 1.0)) return a;
            break;
        case NodeKind::Pow:
            if (is_const(b, 1.0)) return a;
            if (is_const(b, 0.0)) return Node::make_constant(1.0);
            if (is_const(a, 1.0)) return Node::make_constant(1.0);
            break;
        default:
            break;
    }
    return Node::make_binary(p->kind, a, b);
}

NodePtr diff_node(const NodePtr& p, const std::string& var);

NodePtr d_func(const Node& n, const std::string& var) {
    NodePtr u = n.a;
    NodePtr du = diff_node(u, var);
    auto mul = [](NodePtr x, NodePtr y) { return Node::make_binary(NodeKind::Mul, std::move(x), std::move(y)); };
    switch (n.func) {
        case FuncKind::Sin:
            return mul(Node::make_func(FuncKind::Cos, u), du);
        case FuncKind::Cos:
            return Node::make_unary(NodeKind::Neg, mul(Node::make_func(FuncKind::Sin, u), du));
        case FuncKind::Tan: {
            // sec^2 = 1 + tan^2
            NodePtr t = Node::make_func(FuncKind::Tan, u);
            NodePtr sec2 = Node::make_binary(NodeKind::Add, Node::make_constant(1.0), mul(t, t));
            return mul(sec2, du);
        }
        case FuncKind::Exp:
            return mul(Node::make_func(FuncKind::Exp, u), du);
        case FuncKind::Ln:
            return Node::make_binary(NodeKind::Div, du, u);
        case FuncKind::Arctan: {
            NodePtr den = Node::make_binary(NodeKind::Add, Node::make_constant(1.0), mul(u, u));
            return Node::make_binary(NodeKind::Div, du, den);
        }
        case FuncKind::Sinh:
            return mul(Node::make_func(FuncKind::Cosh, u), du);
        case FuncKind::Cosh:
            return mul(Node::make_func(FuncKind::Sinh, u), du);
        case FuncKind::Sqrt: {
            NodePtr den = mul(Node::make_constant(2.0), Node::make_func(FuncKind::Sqrt, u));
            return Node::make_binary(NodeKind::Div, du, den);
        }
        case FuncKind::Abs:
            // abs'(0) taken as 0, via sign(0) = 0
            return mul(Node::make_func(FuncKind::Sign, u), du);
        case FuncKind::Sign:
            return Node::make_constant(0.0);
    }
    return Node::make_constant(0.0);
}

bool depends_on(const Node& n, const std::string& var) {
    switch (n.kind) {
        case NodeKind::Constant:
            return false;
        case NodeKind::Name:
            return n.name == var;
        case NodeKind::Neg:
        case NodeKind::Func:
            return depends_on(*n.a, var);
        default:
            return depends_on(*n.a, var) || depends_on(*n.b, var);
    }
}

NodePtr diff_node(const NodePtr& p, const std::string& var) {
    auto mul = [](NodePtr x, NodePtr y) { return Node::make_binary(NodeKind::Mul, std::move(x), std::move(y)); };
    switch (p->kind) {
        case NodeKind::Constant:
            return Node::make_constant(0.0);
        case NodeKind::Name:
            return Node::make_constant(p->name == var ? 1.0 : 0.0);
        case NodeKind::Neg:
            return Node::make_unary(NodeKind::Neg, diff_node(p->a, var));
        case NodeKind::Add:
            return Node::make_binary(NodeKind::Add, diff_node(p->a, var), diff_node(p->b, var));
        case NodeKind::Sub:
            return Node::make_binary(NodeKind::Sub, diff_node(p->a, var), diff_node(p->b, var));
        case NodeKind::Mul:
            return Node::make_binary(NodeKind::Add, mul(diff_node(p->a, var), p->b),
                                     mul(p->a, diff_node(p->b, var)));
        case NodeKind::Div: {
            NodePtr num = Node::make_binary(NodeKind::Sub, mul(diff_node(p->a, var), p->b),
                                            mul(p->a, diff_node(p->b, var)));
            NodePtr den = mul(p->b, p->b);
            return Node::make_binary(NodeKind::Div, num, den);
        }
        case NodeKind::Pow: {
            if (!depends_on(*p->b, var)) {
                // d(u^c) = c * u^(c-1) * u', valid for any sign of u
                NodePtr cm1 = Node::make_binary(NodeKind::Sub, p->b, Node::make_constant(1.0));
                NodePtr rest = mul(p->b, Node::make_binary(NodeKind::Pow, p->a, cm1));
                return mul(rest, diff_node(p->a, var));
            }
            // d(u^v) = u^v * (v' ln u + v u'/u)
            NodePtr uv = Node::make_binary(NodeKind::Pow, p->a, p->b);
            NodePtr t1 = mul(diff_node(p->b, var), Node::make_func(FuncKind::Ln, p->a));
            NodePtr t2 = Node::make_binary(NodeKind::Div, mul(p->b, diff_node(p->a, var)), p->a);
            return mul(uv, Node::make_binary(NodeKind::Add, t1, t2));
        }
        case NodeKind::Func:
            return d_func(*p, var);
    }
    return Node::make_constant(0.0);
}

// Precedence levels used both for parsing and minimal-paren printing.
// add/sub = 1, mul/div = 2, unary minus = 3, pow = 4, atoms = 5.
int node_prec(const Node& n) {
    switch (n.kind) {
        case NodeKind::Add:
        case NodeKind::Sub:
            return 1;
        case NodeKind::Mul:
        case NodeKind::Div:
            return 2;
        case NodeKind::Neg:
            return 3;
        case NodeKind::Pow:
            return 4;
        default:
            return 5;
    }
}

std::string print_constant(double v) {
    if (v < 0.0) {
        // negative constants print as a parenthesized literal so that
        // e.g. Pow(c, x) with c < 0 re-parses to the same tree
        std::ostringstream os;
        os.precision(17);
        os << "(" << v << ")";
        return os.str();
    }
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

void print_rec(const Node& n, std::ostream& os) {
    auto child = [&os](const Node& c, bool need_parens) {
        if (need_parens) os << "(";
        print_rec(c, os);
        if (need_parens) os << ")";
    };
    switch (n.kind) {
        case NodeKind::Constant:
            os << print_constant(n.value);
            break;
        case NodeKind::Name:
            os << n.name;
            break;
        case NodeKind::Neg:
            os << "-";
            child(*n.a, node_prec(*n.a) < 3);
            break;
        case NodeKind::Add:
            child(*n.a, node_prec(*n.a) < 1);
            os << "+";
            child(*n.b, node_prec(*n.b) <= 1);
            break;
        case NodeKind::Sub:
            child(*n.a, node_prec(*n.a) < 1);
            os << "-";
            child(*n.b, node_prec(*n.b) <= 1);
            break;
        case NodeKind::Mul:
            child(*n.a, node_prec(*n.a) < 2);
            os << "*";
            child(*n.b, node_prec(*n.b) <= 2);
            break;
        case NodeKind::Div:
            child(*n.a, node_prec(*n.a) < 2);
            os << "/";
            child(*n.b, node_prec(*n.b) <= 2);
            break;
        case NodeKind::Pow:
            // right-associative; a^b^c means a^(b^c)
            child(*n.a, node_prec(*n.a) <= 4);
            os << "^";
            child(*n.b, node_prec(*n.b) < 3);
            break;
        case NodeKind::Func:
            os << func_name(n.func) << "(";
            print_rec(*n.a, os);
            os << ")";
            break;
    }
}

std::string print_node(const Node& n) {
    std::ostringstream os;
    print_rec(n, os);
    return os.str();
}

bool equal_nodes(const Node& a, const Node& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case NodeKind::Constant:
            return a.value == b.value;
        case NodeKind::Name:
            return a.name == b.name;
        case NodeKind::Neg:
            return equal_nodes(*a.a, *b.a);
        case NodeKind::Func:
            return a.func == b.func && equal_nodes(*a.a, *b.a);
        default:
            return equal_nodes(*a.a, *b.a) && equal_nodes(*a.b, *b.b);
    }
}

void names_rec(const Node& n, std::set<std::string>& out) {
    switch (n.kind) {
        case NodeKind::Constant:
            return;
        case NodeKind::Name:
            if (n.name != "pi") out.insert(n.name);
            return;
        case NodeKind::Neg:
        case NodeKind::Func:
            names_rec(*n.a, out);
            return;
        default:
            names_rec(*n.a, out);
            names_rec(*n.b, out);
    }
}

// ---- recursive descent parser ----

struct Parser {
    std::string_view text;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }
    bool eat(char c) {
        skip_ws();
        if (pos < text.size() && text[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }
    [[noreturn]] void fail(const std::string& expected) {
        std::ostringstream os;
        os << "syntax error at byte " << pos << ": expected " << expected;
        throw ParseError(os.str(), pos, expected);
    }

    NodePtr parse_expr() {
        NodePtr lhs = parse_term();
        for (;;) {
            skip_ws();
            if (eat('+'))
                lhs = Node::make_binary(NodeKind::Add, lhs, parse_term());
            else if (eat('-'))
                lhs = Node::make_binary(NodeKind::Sub, lhs, parse_term());
            else
                return lhs;
        }
    }
    NodePtr parse_term() {
        NodePtr lhs = parse_unary();
        for (;;) {
            skip_ws();
            if (eat('*'))
                lhs = Node::make_binary(NodeKind::Mul, lhs, parse_unary());
            else if (eat('/'))
                lhs = Node::make_binary(NodeKind::Div, lhs, parse_unary());
            else
                return lhs;
        }
    }
    NodePtr parse_unary() {
        skip_ws();
        if (eat('-')) {
            NodePtr a = parse_unary();
            // a minus sign directly on a literal reads as a negative constant,
            // so printed constants round-trip structurally
            if (a->kind == NodeKind::Constant) return Node::make_constant(-a->value);
            return Node::make_unary(NodeKind::Neg, a);
        }
        return parse_power();
    }
    NodePtr parse_power() {
        NodePtr base = parse_atom();
        skip_ws();
        if (eat('^')) return Node::make_binary(NodeKind::Pow, base, parse_unary());
        return base;
    }
    NodePtr parse_atom() {
        skip_ws();
        if (pos >= text.size()) fail("a number, name or '('");
        char c = text[pos];
        if (c == '(') {
            ++pos;
            NodePtr e = parse_expr();
            if (!eat(')')) fail("')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_name_or_call();
        fail("a number, name or '('");
    }
    NodePtr parse_number() {
        const char* begin = text.data() + pos;
        char* end = nullptr;
        double v = std::strtod(begin, &end);
        if (end == begin) fail("a number");
        pos += static_cast<std::size_t>(end - begin);
        return Node::make_constant(v);
    }
    NodePtr parse_name_or_call() {
        std::size_t start = pos;
        while (pos < text.size() &&
               (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
            ++pos;
        std::string name(text.substr(start, pos - start));
        skip_ws();
        for (const auto& [fname, fkind] : kFuncNames) {
            if (name == fname) {
                if (!eat('(')) fail("'(' after function name '" + name + "'");
                NodePtr arg = parse_expr();
                if (!eat(')')) fail("')'");
                return Node::make_func(fkind, arg);
            }
        }
        return Node::make_name(name);
    }
};

}  // namespace

double Expression::evaluate(const Bindings& b) const { return eval_node(*root_, b); }
Expression Expression::differentiate(const std::string& var) const {
    return Expression(simplify_node(diff_node(root_, var)));
}
Expression Expression::simplify() const { return Expression(simplify_node(root_)); }
std::string Expression::str() const { return print_node(*root_); }
bool Expression::structurally_equal(const Expression& o) const { return equal_nodes(*root_, *o.root_); }
bool Expression::is_constant_zero() const {
    return root_->kind == NodeKind::Constant && root_->value == 0.0;
}
void Expression::collect_free_names(std::set<std::string>& out) const { names_rec(*root_, out); }

Expression parse_expression(std::string_view text) {
    Parser p{text};
    p.skip_ws();
    if (p.pos >= text.size()) throw ParseError("empty expression", 0, "an expression");
    NodePtr e = p.parse_expr();
    p.skip_ws();
    if (p.pos != text.size()) p.fail("end of input");
    return Expression(e);
}

}  // namespace lorfol
