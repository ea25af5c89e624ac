#pragma once

// Closed-form scalar expressions over chart coordinates and parameters:
// parsing, printing, evaluation and exact symbolic differentiation.
//
// Grammar:
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := '-' factor | power
//   power  := atom ('^' factor)?
//   atom   := number | symbol | function '(' expr ')' | '(' expr ')'
//
// `pi` is a numeric constant. Functions: sin cos tan exp log sqrt sinh cosh tanh.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <memory>
#include <numbers>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>

namespace qklab {

enum class ExprKind { number, symbol, add, sub, mul, div, pow, neg, call };
enum class Func { sin, cos, tan, exp, log, sqrt, sinh, cosh, tanh };

inline std::string_view func_name(Func f) {
    switch (f) {
        case Func::sin: return "sin";
        case Func::cos: return "cos";
        case Func::tan: return "tan";
        case Func::exp: return "exp";
        case Func::log: return "log";
        case Func::sqrt: return "sqrt";
        case Func::sinh: return "sinh";
        case Func::cosh: return "cosh";
        case Func::tanh: return "tanh";
    }
    return "?";
}

inline std::optional<Func> func_from_name(std::string_view s) {
    for (Func f : {Func::sin, Func::cos, Func::tan, Func::exp, Func::log, Func::sqrt, Func::sinh,
                   Func::cosh, Func::tanh})
        if (func_name(f) == s) return f;
    return std::nullopt;
}

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

class EvalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ExprNode;

/// Immutable expression handle. Copies share the underlying tree.
class Expr {
public:
    Expr() = default;
    explicit Expr(std::shared_ptr<const ExprNode> n) : node_(std::move(n)) {}

    const ExprNode& node() const { return *node_; }
    const ExprNode* operator->() const { return node_.get(); }
    explicit operator bool() const { return static_cast<bool>(node_); }

    static Expr number(double v);
    static Expr symbol(std::string name);
    static Expr binary(ExprKind k, Expr a, Expr b);
    static Expr negate(Expr a);
    static Expr call(Func f, Expr a);

private:
    std::shared_ptr<const ExprNode> node_;
};

struct ExprNode {
    ExprKind kind = ExprKind::number;
    double value = 0.0;   // number
    std::string name;     // symbol
    Func func = Func::sin;  // call
    Expr lhs;             // unary operand / left operand
    Expr rhs;             // right operand
};

inline Expr Expr::number(double v) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::number;
    n->value = v;
    return Expr(std::move(n));
}

inline Expr Expr::symbol(std::string name) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::symbol;
    n->name = std::move(name);
    return Expr(std::move(n));
}

inline Expr Expr::binary(ExprKind k, Expr a, Expr b) {
    auto n = std::make_shared<ExprNode>();
    n->kind = k;
    n->lhs = std::move(a);
    n->rhs = std::move(b);
    return Expr(std::move(n));
}

inline Expr Expr::negate(Expr a) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::neg;
    n->lhs = std::move(a);
    return Expr(std::move(n));
}

inline Expr Expr::call(Func f, Expr a) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::call;
    n->func = f;
    n->lhs = std::move(a);
    return Expr(std::move(n));
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

class Parser {
public:
    explicit Parser(std::string_view src) : src_(src) {}

    Expr parse_all() {
        skip_ws();
        if (pos_ >= src_.size()) throw ParseError("empty expression", pos_);
        Expr e = parse_expr();
        skip_ws();
        if (pos_ < src_.size())
            throw ParseError(std::string("unexpected character '") + src_[pos_] + "'", pos_);
        return e;
    }

private:
    void skip_ws() {
        while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' ||
                                      src_[pos_] == '\r'))
            ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) {
            if (pos_ >= src_.size())
                throw ParseError(std::string("expected '") + c + "' but reached end of input", pos_);
            throw ParseError(std::string("expected '") + c + "'", pos_);
        }
    }

    Expr parse_expr() {
        Expr lhs = parse_term();
        for (;;) {
            if (accept('+'))
                lhs = Expr::binary(ExprKind::add, lhs, parse_term());
            else if (accept('-'))
                lhs = Expr::binary(ExprKind::sub, lhs, parse_term());
            else
                return lhs;
        }
    }

    Expr parse_term() {
        Expr lhs = parse_factor();
        for (;;) {
            if (accept('*'))
                lhs = Expr::binary(ExprKind::mul, lhs, parse_factor());
            else if (accept('/'))
                lhs = Expr::binary(ExprKind::div, lhs, parse_factor());
            else
                return lhs;
        }
    }

    Expr parse_factor() {
        if (accept('-')) return Expr::negate(parse_factor());
        return parse_power();
    }

    Expr parse_power() {
        Expr base = parse_atom();
        if (accept('^')) return Expr::binary(ExprKind::pow, base, parse_factor());
        return base;
    }

    static bool ident_start(char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
    }
    static bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }
    static bool digit(char c) { return c >= '0' && c <= '9'; }

    Expr parse_atom() {
        skip_ws();
        if (pos_ >= src_.size()) throw ParseError("unexpected end of input", pos_);
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            Expr e = parse_expr();
            expect(')');
            return e;
        }
        if (digit(c) || c == '.') return parse_number();
        if (ident_start(c)) {
            const std::size_t start = pos_;
            while (pos_ < src_.size() && ident_char(src_[pos_])) ++pos_;
            std::string name(src_.substr(start, pos_ - start));
            skip_ws();
            if (pos_ < src_.size() && src_[pos_] == '(') {
                auto f = func_from_name(name);
                if (!f) throw ParseError("unknown function '" + name + "'", start);
                ++pos_;
                Expr arg = parse_expr();
                expect(')');
                return Expr::call(*f, arg);
            }
            if (name == "pi") return Expr::number(std::numbers::pi);
            return Expr::symbol(std::move(name));
        }
        throw ParseError(std::string("unexpected character '") + c + "'", pos_);
    }

    Expr parse_number() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && digit(src_[pos_])) ++pos_;
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            while (pos_ < src_.size() && digit(src_[pos_])) ++pos_;
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t p = pos_ + 1;
            if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
            if (p < src_.size() && digit(src_[p])) {
                pos_ = p;
                while (pos_ < src_.size() && digit(src_[pos_])) ++pos_;
            }
        }
        double v = 0.0;
        const char* first = src_.data() + start;
        const char* last = src_.data() + pos_;
        auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || ptr != last) throw ParseError("malformed number", start);
        return Expr::number(v);
    }

    std::string_view src_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline Expr parse(std::string_view source) { return detail::Parser(source).parse_all(); }

// ---------------------------------------------------------------------------
// Printing

namespace detail {

inline int precedence(const ExprNode& n) {
    switch (n.kind) {
        case ExprKind::add:
        case ExprKind::sub: return 1;
        case ExprKind::mul:
        case ExprKind::div: return 2;
        case ExprKind::neg: return 3;
        case ExprKind::pow: return 4;
        case ExprKind::number: return n.value < 0 || std::signbit(n.value) ? 3 : 5;
        default: return 5;
    }
}

inline std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void print(const ExprNode& n, std::string& out) {
    auto sub = [&out](const Expr& e, bool paren) {
        if (paren) out += '(';
        print(e.node(), out);
        if (paren) out += ')';
    };
    const int p = precedence(n);
    switch (n.kind) {
        case ExprKind::number: out += format_number(n.value); break;
        case ExprKind::symbol: out += n.name; break;
        case ExprKind::add:
        case ExprKind::sub:
        case ExprKind::mul:
        case ExprKind::div: {
            const char op = n.kind == ExprKind::add   ? '+'
                            : n.kind == ExprKind::sub ? '-'
                            : n.kind == ExprKind::mul ? '*'
                                                      : '/';
            sub(n.lhs, precedence(n.lhs.node()) < p);
            out += ' ';
            out += op;
            out += ' ';
            sub(n.rhs, precedence(n.rhs.node()) <= p);
            break;
        }
        case ExprKind::pow:
            sub(n.lhs, precedence(n.lhs.node()) < 5);
            out += '^';
            sub(n.rhs, precedence(n.rhs.node()) < 3);
            break;
        case ExprKind::neg:
            out += '-';
            sub(n.lhs, precedence(n.lhs.node()) < 3);
            break;
        case ExprKind::call:
            out += func_name(n.func);
            out += '(';
            print(n.lhs.node(), out);
            out += ')';
            break;
    }
}

}  // namespace detail

/// Text form accepted by `parse`; numbers are written with 17 significant digits.
inline std::string to_string(const Expr& e) {
    std::string out;
    detail::print(e.node(), out);
    return out;
}

inline bool structurally_equal(const Expr& a, const Expr& b) {
    const ExprNode& x = a.node();
    const ExprNode& y = b.node();
    if (x.kind != y.kind) return false;
    switch (x.kind) {
        case ExprKind::number: return x.value == y.value;
        case ExprKind::symbol: return x.name == y.name;
        case ExprKind::neg: return structurally_equal(x.lhs, y.lhs);
        case ExprKind::call: return x.func == y.func && structurally_equal(x.lhs, y.lhs);
        default: return structurally_equal(x.lhs, y.lhs) && structurally_equal(x.rhs, y.rhs);
    }
}

inline void collect_symbols(const Expr& e, std::set<std::string>& out) {
    const ExprNode& n = e.node();
    switch (n.kind) {
        case ExprKind::number: return;
        case ExprKind::symbol: out.insert(n.name); return;
        case ExprKind::neg:
        case ExprKind::call: collect_symbols(n.lhs, out); return;
        default:
            collect_symbols(n.lhs, out);
            collect_symbols(n.rhs, out);
    }
}

inline std::set<std::string> symbols(const Expr& e) {
    std::set<std::string> s;
    collect_symbols(e, s);
    return s;
}

inline std::size_t node_count(const Expr& e) {
    const ExprNode& n = e.node();
    switch (n.kind) {
        case ExprKind::number:
        case ExprKind::symbol: return 1;
        case ExprKind::neg:
        case ExprKind::call: return 1 + node_count(n.lhs);
        default: return 1 + node_count(n.lhs) + node_count(n.rhs);
    }
}

// ---------------------------------------------------------------------------
// Evaluation

using Env = std::unordered_map<std::string, double>;

namespace detail {

inline bool is_integer(double v) { return std::isfinite(v) && v == std::nearbyint(v); }

[[noreturn]] inline void domain_error(const ExprNode& n, const std::string& what, double v) {
    std::string node_text;
    print(n, node_text);
    throw EvalError(what + " (value " + format_number(v) + ") in '" + node_text + "'");
}

inline double eval(const ExprNode& n, const Env& env) {
    switch (n.kind) {
        case ExprKind::number: return n.value;
        case ExprKind::symbol: {
            auto it = env.find(n.name);
            if (it == env.end()) throw EvalError("unbound symbol '" + n.name + "'");
            return it->second;
        }
        case ExprKind::add: return eval(n.lhs.node(), env) + eval(n.rhs.node(), env);
        case ExprKind::sub: return eval(n.lhs.node(), env) - eval(n.rhs.node(), env);
        case ExprKind::mul: return eval(n.lhs.node(), env) * eval(n.rhs.node(), env);
        case ExprKind::div: {
            const double a = eval(n.lhs.node(), env);
            const double b = eval(n.rhs.node(), env);
            if (b == 0.0) domain_error(n, "division by zero", b);
            return a / b;
        }
        case ExprKind::neg: return -eval(n.lhs.node(), env);
        case ExprKind::pow: {
            const double a = eval(n.lhs.node(), env);
            const double b = eval(n.rhs.node(), env);
            if (a < 0.0 && !is_integer(b)) domain_error(n, "non-integer power of negative base", a);
            if (a == 0.0 && b < 0.0) domain_error(n, "division by zero", a);
            const double r = std::pow(a, b);
            if (!std::isfinite(r)) domain_error(n, "non-finite power", r);
            return r;
        }
        case ExprKind::call: {
            const double a = eval(n.lhs.node(), env);
            double r = 0.0;
            switch (n.func) {
                case Func::sin: r = std::sin(a); break;
                case Func::cos: r = std::cos(a); break;
                case Func::tan: r = std::tan(a); break;
                case Func::exp: r = std::exp(a); break;
                case Func::log:
                    if (a <= 0.0) domain_error(n, "log of non-positive argument", a);
                    r = std::log(a);
                    break;
                case Func::sqrt:
                    if (a < 0.0) domain_error(n, "sqrt of negative argument", a);
                    r = std::sqrt(a);
                    break;
                case Func::sinh: r = std::sinh(a); break;
                case Func::cosh: r = std::cosh(a); break;
                case Func::tanh: r = std::tanh(a); break;
            }
            if (!std::isfinite(r)) domain_error(n, "non-finite result", r);
            return r;
        }
    }
    return 0.0;
}

}  // namespace detail

/// Evaluates `e` in double precision. Throws EvalError on domain violations
/// and on unbound symbols; never returns a non-finite value.
inline double eval(const Expr& e, const Env& env) {
    const double v = detail::eval(e.node(), env);
    if (!std::isfinite(v)) detail::domain_error(e.node(), "non-finite result", v);
    return v;
}

// ---------------------------------------------------------------------------
// Differentiation
//
// Builders fold numeric subtrees and neutral elements only; no other
// algebraic rewriting takes place.

namespace fold {

inline bool is_num(const Expr& e) { return e->kind == ExprKind::number; }
inline bool is_num(const Expr& e, double v) { return is_num(e) && e->value == v; }

inline Expr num(double v) { return Expr::number(v); }

inline Expr neg(const Expr& a) {
    if (is_num(a)) return num(-a->value);
    if (a->kind == ExprKind::neg) return a->lhs;
    return Expr::negate(a);
}

inline Expr add(const Expr& a, const Expr& b) {
    if (is_num(a) && is_num(b)) return num(a->value + b->value);
    if (is_num(a, 0.0)) return b;
    if (is_num(b, 0.0)) return a;
    return Expr::binary(ExprKind::add, a, b);
}

inline Expr sub(const Expr& a, const Expr& b) {
    if (is_num(a) && is_num(b)) return num(a->value - b->value);
    if (is_num(b, 0.0)) return a;
    if (is_num(a, 0.0)) return neg(b);
    return Expr::binary(ExprKind::sub, a, b);
}

inline Expr mul(const Expr& a, const Expr& b) {
    if (is_num(a) && is_num(b)) return num(a->value * b->value);
    if (is_num(a, 0.0) || is_num(b, 0.0)) return num(0.0);
    if (is_num(a, 1.0)) return b;
    if (is_num(b, 1.0)) return a;
    if (is_num(a, -1.0)) return neg(b);
    if (is_num(b, -1.0)) return neg(a);
    return Expr::binary(ExprKind::mul, a, b);
}

inline Expr div(const Expr& a, const Expr& b) {
    if (is_num(a) && is_num(b) && b->value != 0.0) return num(a->value / b->value);
    if (is_num(a, 0.0)) return num(0.0);
    if (is_num(b, 1.0)) return a;
    return Expr::binary(ExprKind::div, a, b);
}

inline Expr pow(const Expr& a, const Expr& b) {
    if (is_num(b, 1.0)) return a;
    if (is_num(b, 0.0)) return num(1.0);
    if (is_num(a) && is_num(b)) {
        const double r = std::pow(a->value, b->value);
        if (std::isfinite(r) && (a->value > 0.0 || detail::is_integer(b->value))) return num(r);
    }
    return Expr::binary(ExprKind::pow, a, b);
}

inline Expr call(Func f, const Expr& a) { return Expr::call(f, a); }

}  // namespace fold

namespace detail {

/// Value of a symbol-free subtree, if it evaluates cleanly.
inline std::optional<double> constant_value(const Expr& e) {
    if (!symbols(e).empty()) return std::nullopt;
    try {
        return eval(e, Env{});
    } catch (const EvalError&) {
        return std::nullopt;
    }
}

}  // namespace detail

/// Exact derivative of `e` with respect to symbol `var`.
inline Expr differentiate(const Expr& e, const std::string& var) {
    using namespace fold;
    const ExprNode& n = e.node();
    switch (n.kind) {
        case ExprKind::number: return num(0.0);
        case ExprKind::symbol: return num(n.name == var ? 1.0 : 0.0);
        case ExprKind::add: return add(differentiate(n.lhs, var), differentiate(n.rhs, var));
        case ExprKind::sub: return sub(differentiate(n.lhs, var), differentiate(n.rhs, var));
        case ExprKind::neg: return neg(differentiate(n.lhs, var));
        case ExprKind::mul: {
            const Expr da = differentiate(n.lhs, var);
            const Expr db = differentiate(n.rhs, var);
            return add(mul(da, n.rhs), mul(n.lhs, db));
        }
        case ExprKind::div: {
            const Expr da = differentiate(n.lhs, var);
            const Expr db = differentiate(n.rhs, var);
            // a'/b - a b'/b^2
            return sub(div(da, n.rhs), div(mul(n.lhs, db), pow(n.rhs, num(2.0))));
        }
        case ExprKind::pow: {
            const auto k = detail::constant_value(n.rhs);
            if (k && detail::is_integer(*k)) {
                const Expr da = differentiate(n.lhs, var);
                return mul(mul(num(*k), pow(n.lhs, num(*k - 1.0))), da);
            }
            // a^b = exp(b log a)
            const Expr rewritten = call(Func::exp, mul(n.rhs, call(Func::log, n.lhs)));
            return differentiate(rewritten, var);
        }
        case ExprKind::call: {
            const Expr& a = n.lhs;
            const Expr da = differentiate(a, var);
            if (is_num(da, 0.0)) return num(0.0);
            Expr outer;
            switch (n.func) {
                case Func::sin: outer = call(Func::cos, a); break;
                case Func::cos: outer = neg(call(Func::sin, a)); break;
                case Func::tan: outer = div(num(1.0), pow(call(Func::cos, a), num(2.0))); break;
                case Func::exp: outer = e; break;
                case Func::log: return div(da, a);
                case Func::sqrt: return div(da, mul(num(2.0), e));
                case Func::sinh: outer = call(Func::cosh, a); break;
                case Func::cosh: outer = call(Func::sinh, a); break;
                case Func::tanh: outer = sub(num(1.0), pow(e, num(2.0))); break;
            }
            return mul(outer, da);
        }
    }
    return num(0.0);
}

}  // namespace qklab
