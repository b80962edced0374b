#pragma once

// Tiny arithmetic grammar for closed-form profiles and couplings.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('-' | '+') unary | power
//   power   := primary ('^' unary)?
//   primary := number | 'x' | 'p' | 'exp' '(' expr ')' | '(' expr ')'
//
// 'x' and 'p' name the same independent variable. Expressions are parsed
// into an immutable tree and differentiated symbolically; nothing is handed
// to a host-language evaluator.

#include <cctype>
#include <cstdio>
#include <cmath>
#include <memory>
#include <string>
#include <string_view>

#include "errors.hpp"

namespace chh {

class Expression {
public:
    enum class Op { constant, variable, add, sub, mul, div, pow, neg, exp };

    Expression() : node_(make_const(0.0)) {}

    static Expression parse(std::string_view text) {
        Parser p{text, 0};
        auto n = p.expr();
        p.skip();
        if (p.pos != text.size())
            throw ConfigError("unexpected '" + std::string(text.substr(p.pos, 1)) + "' at offset " +
                              std::to_string(p.pos) + " in expression \"" + std::string(text) + "\"");
        return Expression(std::move(n));
    }

    double operator()(double x) const { return eval(*node_, x); }

    Expression derivative() const { return Expression(diff(node_)); }

    bool is_constant() const { return !depends(*node_); }

    std::string str() const { return print(*node_); }

private:
    struct Node;
    using Ptr = std::shared_ptr<const Node>;
    struct Node {
        Op op;
        double value = 0.0;
        Ptr lhs, rhs;
    };

    explicit Expression(Ptr n) : node_(std::move(n)) {}

    static Ptr make_const(double v) { return std::make_shared<const Node>(Node{Op::constant, v, {}, {}}); }
    static Ptr make_var() { return std::make_shared<const Node>(Node{Op::variable, 0.0, {}, {}}); }
    static bool is_const(const Ptr& n, double v) { return n->op == Op::constant && n->value == v; }

    static Ptr make(Op op, Ptr a, Ptr b = {}) {
        // Constant folding keeps derivative trees small.
        if (op == Op::neg && a->op == Op::constant) return make_const(-a->value);
        if (op == Op::exp && a->op == Op::constant) return make_const(std::exp(a->value));
        if (b && a->op == Op::constant && b->op == Op::constant) {
            Node tmp{op, 0.0, a, b};
            return make_const(eval(tmp, 0.0));
        }
        switch (op) {
            case Op::add:
                if (is_const(a, 0.0)) return b;
                if (is_const(b, 0.0)) return a;
                break;
            case Op::sub:
                if (is_const(b, 0.0)) return a;
                if (is_const(a, 0.0)) return make(Op::neg, b);
                break;
            case Op::mul:
                if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0);
                if (is_const(a, 1.0)) return b;
                if (is_const(b, 1.0)) return a;
                break;
            case Op::div:
                if (is_const(a, 0.0)) return make_const(0.0);
                if (is_const(b, 1.0)) return a;
                break;
            case Op::pow:
                if (is_const(b, 1.0)) return a;
                if (is_const(b, 0.0)) return make_const(1.0);
                break;
            default:
                break;
        }
        return std::make_shared<const Node>(Node{op, 0.0, std::move(a), std::move(b)});
    }

    static double eval(const Node& n, double x) {
        switch (n.op) {
            case Op::constant: return n.value;
            case Op::variable: return x;
            case Op::add: return eval(*n.lhs, x) + eval(*n.rhs, x);
            case Op::sub: return eval(*n.lhs, x) - eval(*n.rhs, x);
            case Op::mul: return eval(*n.lhs, x) * eval(*n.rhs, x);
            case Op::div: return eval(*n.lhs, x) / eval(*n.rhs, x);
            case Op::pow: {
                double b = eval(*n.lhs, x), e = eval(*n.rhs, x);
                // Integer powers of negative bases are common (p^2, x^3).
                if (e == std::round(e) && std::abs(e) < 64) {
                    int k = static_cast<int>(std::abs(e));
                    double r = 1.0;
                    for (int i = 0; i < k; ++i) r *= b;
                    return e < 0 ? 1.0 / r : r;
                }
                return std::pow(b, e);
            }
            case Op::neg: return -eval(*n.lhs, x);
            case Op::exp: return std::exp(eval(*n.lhs, x));
        }
        return 0.0;
    }

    static bool depends(const Node& n) {
        if (n.op == Op::variable) return true;
        if (n.op == Op::constant) return false;
        return (n.lhs && depends(*n.lhs)) || (n.rhs && depends(*n.rhs));
    }

    static Ptr diff(const Ptr& n) {
        switch (n->op) {
            case Op::constant: return make_const(0.0);
            case Op::variable: return make_const(1.0);
            case Op::add: return make(Op::add, diff(n->lhs), diff(n->rhs));
            case Op::sub: return make(Op::sub, diff(n->lhs), diff(n->rhs));
            case Op::mul:
                return make(Op::add, make(Op::mul, diff(n->lhs), n->rhs), make(Op::mul, n->lhs, diff(n->rhs)));
            case Op::div:
                return make(Op::div,
                            make(Op::sub, make(Op::mul, diff(n->lhs), n->rhs), make(Op::mul, n->lhs, diff(n->rhs))),
                            make(Op::mul, n->rhs, n->rhs));
            case Op::pow: {
                if (depends(*n->rhs)) throw ConfigError("cannot differentiate a power with a variable exponent");
                auto reduced = make(Op::sub, n->rhs, make_const(1.0));
                return make(Op::mul, make(Op::mul, n->rhs, make(Op::pow, n->lhs, reduced)), diff(n->lhs));
            }
            case Op::neg: return make(Op::neg, diff(n->lhs));
            case Op::exp: return make(Op::mul, n, diff(n->lhs));
        }
        return make_const(0.0);
    }

    static std::string print(const Node& n) {
        switch (n.op) {
            case Op::constant: {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.17g", n.value);
                return buf;
            }
            case Op::variable: return "x";
            case Op::add: return "(" + print(*n.lhs) + "+" + print(*n.rhs) + ")";
            case Op::sub: return "(" + print(*n.lhs) + "-" + print(*n.rhs) + ")";
            case Op::mul: return "(" + print(*n.lhs) + "*" + print(*n.rhs) + ")";
            case Op::div: return "(" + print(*n.lhs) + "/" + print(*n.rhs) + ")";
            case Op::pow: return "(" + print(*n.lhs) + "^" + print(*n.rhs) + ")";
            case Op::neg: return "(-" + print(*n.lhs) + ")";
            case Op::exp: return "exp(" + print(*n.lhs) + ")";
        }
        return {};
    }

    struct Parser {
        std::string_view s;
        std::size_t pos;

        void skip() {
            while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        }
        bool accept(char c) {
            skip();
            if (pos < s.size() && s[pos] == c) {
                ++pos;
                return true;
            }
            return false;
        }
        [[noreturn]] void fail(const std::string& what) const {
            throw ConfigError(what + " at offset " + std::to_string(pos) + " in expression \"" + std::string(s) +
                              "\"");
        }
        Ptr expr() {
            auto n = term();
            for (;;) {
                if (accept('+')) n = make(Op::add, n, term());
                else if (accept('-')) n = make(Op::sub, n, term());
                else return n;
            }
        }
        Ptr term() {
            auto n = unary();
            for (;;) {
                if (accept('*')) n = make(Op::mul, n, unary());
                else if (accept('/')) n = make(Op::div, n, unary());
                else return n;
            }
        }
        Ptr unary() {
            if (accept('-')) return make(Op::neg, unary());
            if (accept('+')) return unary();
            return power();
        }
        Ptr power() {
            auto base = primary();
            if (accept('^')) return make(Op::pow, base, unary());
            return base;
        }
        Ptr primary() {
            skip();
            if (pos >= s.size()) fail("unexpected end");
            char c = s[pos];
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
                std::size_t start = pos;
                while (pos < s.size() && (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.')) ++pos;
                if (pos < s.size() && (s[pos] == 'e' || s[pos] == 'E')) {
                    std::size_t save = pos++;
                    if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) ++pos;
                    if (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
                        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
                    } else {
                        pos = save;  // 'e' belongs to something else, e.g. "2exp(...)" is rejected later
                    }
                }
                std::string tok(s.substr(start, pos - start));
                std::size_t used = 0;
                double v = 0.0;
                try {
                    v = std::stod(tok, &used);
                } catch (const std::exception&) {
                    fail("bad number '" + tok + "'");
                }
                if (used != tok.size()) fail("bad number '" + tok + "'");
                return make_const(v);
            }
            if (s.substr(pos, 3) == "exp") {
                pos += 3;
                if (!accept('(')) fail("expected '(' after exp");
                auto arg = expr();
                if (!accept(')')) fail("expected ')'");
                return make(Op::exp, arg);
            }
            if (c == 'x' || c == 'p') {
                ++pos;
                return make_var();
            }
            if (accept('(')) {
                auto n = expr();
                if (!accept(')')) fail("expected ')'");
                return n;
            }
            fail(std::string("unexpected '") + c + "'");
        }
    };

    Ptr node_;
};

}  // namespace chh
