#include "dtmm/expr.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>

namespace dtmm {

namespace {

bool finite(cplx v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); }

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_complex(cplx v) {
    if (v.imag() == 0.0) return fmt_double(v.real());
    if (v.real() == 0.0) return fmt_double(v.imag()) + "j";
    std::string s = "(" + fmt_double(v.real());
    if (v.imag() >= 0.0 || std::isnan(v.imag())) s += "+";
    s += fmt_double(v.imag()) + "j)";
    return s;
}

ExprPtr make(Expr e) { return std::make_shared<const Expr>(std::move(e)); }

bool is_number(const ExprPtr& e, cplx v) {
    return e->op == Expr::Op::number && e->value == v;
}

}  // namespace

ExprPtr Expr::number(cplx v) {
    Expr e;
    e.op = Op::number;
    e.value = v;
    return make(std::move(e));
}

ExprPtr Expr::var() {
    Expr e;
    e.op = Op::var;
    return make(std::move(e));
}

ExprPtr Expr::unary(Op op, ExprPtr a) {
    Expr e;
    e.op = op;
    e.a = std::move(a);
    return make(std::move(e));
}

ExprPtr Expr::binary(Op op, ExprPtr a, ExprPtr b) {
    Expr e;
    e.op = op;
    e.a = std::move(a);
    e.b = std::move(b);
    return make(std::move(e));
}

ExprPtr Expr::antiderivative(ExprPtr a, double anchor) {
    Expr e;
    e.op = Op::antideriv;
    e.a = std::move(a);
    e.anchor = anchor;
    return make(std::move(e));
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace {

struct Lexer {
    std::string_view text;
    std::size_t pos = 0;
    int line;
    int col_offset;

    [[noreturn]] void fail(const std::string& msg, std::size_t at) const {
        throw ParseError(msg, line, col_offset + static_cast<int>(at) + 1);
    }

    void skip_ws() {
        while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
    }

    bool eof() {
        skip_ws();
        return pos >= text.size();
    }

    char peek() {
        skip_ws();
        return pos < text.size() ? text[pos] : '\0';
    }

    bool consume(char c) {
        if (peek() == c) {
            ++pos;
            return true;
        }
        return false;
    }
};

struct Parser {
    Lexer lx;

    ExprPtr parse() {
        ExprPtr e = expression();
        if (!lx.eof()) lx.fail("unexpected trailing input", lx.pos);
        return e;
    }

    ExprPtr expression() {
        ExprPtr e = term();
        for (;;) {
            if (lx.consume('+')) e = Expr::binary(Expr::Op::add, e, term());
            else if (lx.consume('-')) e = Expr::binary(Expr::Op::sub, e, term());
            else return e;
        }
    }

    ExprPtr term() {
        ExprPtr e = factor();
        for (;;) {
            if (lx.consume('*')) e = Expr::binary(Expr::Op::mul, e, factor());
            else if (lx.consume('/')) e = Expr::binary(Expr::Op::div, e, factor());
            else return e;
        }
    }

    // Unary minus binds looser than '^': -x^2 is -(x^2).
    ExprPtr factor() {
        if (lx.consume('-')) return Expr::unary(Expr::Op::neg, factor());
        return power();
    }

    ExprPtr power() {
        ExprPtr base = primary();
        if (lx.consume('^')) return Expr::binary(Expr::Op::pow, base, factor());
        return base;
    }

    ExprPtr primary() {
        char c = lx.peek();
        std::size_t start = lx.pos;
        if (c == '(') {
            ++lx.pos;
            ExprPtr e = expression();
            if (!lx.consume(')')) lx.fail("expected ')'", lx.pos);
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number(start);
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return name(start);
        lx.fail(c == '\0' ? "unexpected end of expression"
                          : std::string("unexpected character '") + c + "'",
                start);
    }

    ExprPtr number(std::size_t start) {
        const char* begin = lx.text.data() + lx.pos;
        char* end = nullptr;
        double v = std::strtod(begin, &end);
        if (end == begin) lx.fail("malformed number", start);
        lx.pos += static_cast<std::size_t>(end - begin);
        if (lx.pos < lx.text.size() && lx.text[lx.pos] == 'j') {
            ++lx.pos;
            return Expr::number(cplx(0.0, v));
        }
        return Expr::number(cplx(v, 0.0));
    }

    ExprPtr name(std::size_t start) {
        std::size_t p = lx.pos;
        while (p < lx.text.size() &&
               (std::isalnum(static_cast<unsigned char>(lx.text[p])) || lx.text[p] == '_'))
            ++p;
        std::string id(lx.text.substr(lx.pos, p - lx.pos));
        lx.pos = p;

        if (id == "x") return Expr::var();
        if (id == "pi") return Expr::number(cplx(std::numbers::pi, 0.0));
        if (id == "e") return Expr::number(cplx(std::numbers::e, 0.0));
        if (id == "j") return Expr::number(cplx(0.0, 1.0));

        static const std::pair<const char*, Expr::Op> fns[] = {
            {"sin", Expr::Op::sin},   {"cos", Expr::Op::cos},   {"tan", Expr::Op::tan},
            {"sinh", Expr::Op::sinh}, {"cosh", Expr::Op::cosh}, {"exp", Expr::Op::exp},
            {"log", Expr::Op::log},   {"sqrt", Expr::Op::sqrt}, {"abs", Expr::Op::abs},
        };
        for (const auto& [fname, op] : fns) {
            if (id == fname) {
                if (!lx.consume('(')) lx.fail("expected '(' after function name", lx.pos);
                ExprPtr arg = expression();
                if (!lx.consume(')')) lx.fail("expected ')'", lx.pos);
                return Expr::unary(op, arg);
            }
        }
        lx.fail("unknown identifier '" + id + "'", start);
    }
};

}  // namespace

ExprPtr parse_expression(std::string_view text, int line, int column_offset) {
    Parser p{Lexer{text, 0, line, column_offset}};
    return p.parse();
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace {

cplx pow_eval(cplx a, cplx b) {
    // Integer exponents by repeated multiplication; keeps real inputs exactly
    // real and avoids log-branch noise.
    if (b.imag() == 0.0) {
        double n = b.real();
        if (n == std::floor(n) && std::abs(n) <= 64.0) {
            long m = static_cast<long>(n);
            bool inv = m < 0;
            unsigned long um = static_cast<unsigned long>(inv ? -m : m);
            cplx r(1.0, 0.0), base = a;
            while (um) {
                if (um & 1UL) r *= base;
                base *= base;
                um >>= 1UL;
            }
            if (!inv) return r;
            if (r == cplx(0.0, 0.0)) throw EvalError("zero raised to a negative power");
            return cplx(1.0, 0.0) / r;
        }
    }
    return std::pow(a, b);
}

double adaptive_simpson(const ExprPtr& e, double a, double fa, double b, double fb,
                        double m, double fm, double whole, double tol, int depth);

double integrand(const ExprPtr& e, double t);

double simpson(double fa, double fm, double fb, double a, double b) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double integrand(const ExprPtr& e, double t) {
    cplx v = eval_expr(e, cplx(t, 0.0));
    if (std::abs(v.imag()) > 1e-12 * (1.0 + std::abs(v.real())))
        throw EvalError("antiderivative of a non-real integrand along the real axis");
    return v.real();
}

double adaptive_simpson(const ExprPtr& e, double a, double fa, double b, double fb,
                        double m, double fm, double whole, double tol, int depth) {
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = integrand(e, lm), frm = integrand(e, rm);
    double left = simpson(fa, flm, fm, a, m);
    double right = simpson(fm, frm, fb, m, b);
    double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return adaptive_simpson(e, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson(e, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

double antideriv_eval(const Expr& e, cplx x) {
    if (std::abs(x.imag()) > 1e-12 * (1.0 + std::abs(x.real())))
        throw EvalError("antiderivative node evaluated off the real axis");
    double a = e.anchor, b = x.real();
    if (a == b) return 0.0;
    double fa = integrand(e.a, a), fb = integrand(e.a, b);
    double m = 0.5 * (a + b), fm = integrand(e.a, m);
    double whole = simpson(fa, fm, fb, a, b);
    double tol = 1e-12 * (1.0 + std::abs(whole));
    return adaptive_simpson(e.a, a, fa, b, fb, m, fm, whole, tol, 40);
}

}  // namespace

cplx eval_expr(const ExprPtr& e, cplx x) {
    using Op = Expr::Op;
    cplx r;
    switch (e->op) {
        case Op::number: return e->value;
        case Op::var: return x;
        case Op::add: r = eval_expr(e->a, x) + eval_expr(e->b, x); break;
        case Op::sub: r = eval_expr(e->a, x) - eval_expr(e->b, x); break;
        case Op::mul: r = eval_expr(e->a, x) * eval_expr(e->b, x); break;
        case Op::div: {
            cplx den = eval_expr(e->b, x);
            if (den == cplx(0.0, 0.0)) throw EvalError("division by zero");
            r = eval_expr(e->a, x) / den;
            break;
        }
        case Op::pow: r = pow_eval(eval_expr(e->a, x), eval_expr(e->b, x)); break;
        case Op::neg: r = -eval_expr(e->a, x); break;
        case Op::sin: r = std::sin(eval_expr(e->a, x)); break;
        case Op::cos: r = std::cos(eval_expr(e->a, x)); break;
        case Op::tan: r = std::tan(eval_expr(e->a, x)); break;
        case Op::sinh: r = std::sinh(eval_expr(e->a, x)); break;
        case Op::cosh: r = std::cosh(eval_expr(e->a, x)); break;
        case Op::exp: r = std::exp(eval_expr(e->a, x)); break;
        case Op::log: {
            cplx v = eval_expr(e->a, x);
            if (v == cplx(0.0, 0.0)) throw EvalError("log of zero");
            r = std::log(principal_input(v));
            break;
        }
        case Op::sqrt: r = std::sqrt(principal_input(eval_expr(e->a, x))); break;
        case Op::abs: r = cplx(std::abs(eval_expr(e->a, x)), 0.0); break;
        case Op::antideriv: r = cplx(antideriv_eval(*e, x), 0.0); break;
    }
    if (!finite(r)) throw EvalError("non-finite expression value");
    return r;
}

// ---------------------------------------------------------------------------
// Symbolic differentiation
// ---------------------------------------------------------------------------

namespace {

// Folding constructors; keep derivative trees from ballooning.
ExprPtr c_num(cplx v) { return Expr::number(v); }

ExprPtr c_add(ExprPtr a, ExprPtr b) {
    if (is_number(a, cplx(0, 0))) return b;
    if (is_number(b, cplx(0, 0))) return a;
    if (a->op == Expr::Op::number && b->op == Expr::Op::number)
        return c_num(a->value + b->value);
    return Expr::binary(Expr::Op::add, a, b);
}

ExprPtr c_sub(ExprPtr a, ExprPtr b) {
    if (is_number(b, cplx(0, 0))) return a;
    if (a->op == Expr::Op::number && b->op == Expr::Op::number)
        return c_num(a->value - b->value);
    return Expr::binary(Expr::Op::sub, a, b);
}

ExprPtr c_mul(ExprPtr a, ExprPtr b) {
    if (is_number(a, cplx(0, 0)) || is_number(b, cplx(0, 0))) return c_num(cplx(0, 0));
    if (is_number(a, cplx(1, 0))) return b;
    if (is_number(b, cplx(1, 0))) return a;
    if (a->op == Expr::Op::number && b->op == Expr::Op::number)
        return c_num(a->value * b->value);
    return Expr::binary(Expr::Op::mul, a, b);
}

ExprPtr c_div(ExprPtr a, ExprPtr b) {
    if (is_number(a, cplx(0, 0))) return c_num(cplx(0, 0));
    if (is_number(b, cplx(1, 0))) return a;
    return Expr::binary(Expr::Op::div, a, b);
}

}  // namespace

namespace ex {
ExprPtr num(cplx v) { return c_num(v); }
ExprPtr add(ExprPtr a, ExprPtr b) { return c_add(std::move(a), std::move(b)); }
ExprPtr sub(ExprPtr a, ExprPtr b) { return c_sub(std::move(a), std::move(b)); }
ExprPtr mul(ExprPtr a, ExprPtr b) { return c_mul(std::move(a), std::move(b)); }
ExprPtr div(ExprPtr a, ExprPtr b) { return c_div(std::move(a), std::move(b)); }
}  // namespace ex

ExprPtr differentiate(const ExprPtr& e) {
    using Op = Expr::Op;
    switch (e->op) {
        case Op::number: return c_num(cplx(0, 0));
        case Op::var: return c_num(cplx(1, 0));
        case Op::add: return c_add(differentiate(e->a), differentiate(e->b));
        case Op::sub: return c_sub(differentiate(e->a), differentiate(e->b));
        case Op::mul:
            return c_add(c_mul(differentiate(e->a), e->b), c_mul(e->a, differentiate(e->b)));
        case Op::div:
            return c_div(c_sub(c_mul(differentiate(e->a), e->b),
                               c_mul(e->a, differentiate(e->b))),
                         Expr::binary(Op::pow, e->b, c_num(cplx(2, 0))));
        case Op::pow:
            if (e->b->op == Op::number) {
                // d(a^c) = c * a^(c-1) * a'
                cplx c = e->b->value;
                if (c == cplx(0, 0)) return c_num(cplx(0, 0));
                ExprPtr p = (c == cplx(1, 0))
                                ? c_num(cplx(1, 0))
                                : Expr::binary(Op::pow, e->a, c_num(c - cplx(1, 0)));
                return c_mul(c_num(c), c_mul(p, differentiate(e->a)));
            }
            // d(a^b) = a^b * (b' log a + b a'/a)
            return c_mul(Expr::binary(Op::pow, e->a, e->b),
                         c_add(c_mul(differentiate(e->b), Expr::unary(Op::log, e->a)),
                               c_div(c_mul(e->b, differentiate(e->a)), e->a)));
        case Op::neg: return Expr::unary(Op::neg, differentiate(e->a));
        case Op::sin: return c_mul(Expr::unary(Op::cos, e->a), differentiate(e->a));
        case Op::cos:
            return Expr::unary(Op::neg, c_mul(Expr::unary(Op::sin, e->a), differentiate(e->a)));
        case Op::tan:
            return c_mul(c_add(c_num(cplx(1, 0)),
                               Expr::binary(Op::pow, Expr::unary(Op::tan, e->a),
                                            c_num(cplx(2, 0)))),
                         differentiate(e->a));
        case Op::sinh: return c_mul(Expr::unary(Op::cosh, e->a), differentiate(e->a));
        case Op::cosh: return c_mul(Expr::unary(Op::sinh, e->a), differentiate(e->a));
        case Op::exp: return c_mul(Expr::unary(Op::exp, e->a), differentiate(e->a));
        case Op::log: return c_div(differentiate(e->a), e->a);
        case Op::sqrt:
            return c_div(differentiate(e->a),
                         c_mul(c_num(cplx(2, 0)), Expr::unary(Op::sqrt, e->a)));
        case Op::abs:
            throw UnsupportedCoefficientError("abs(...) has no holomorphic derivative");
        case Op::antideriv: return e->a;
    }
    throw Error("unreachable expression node");
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

std::string to_string(const ExprPtr& e) {
    using Op = Expr::Op;
    auto bin = [&](const char* op) {
        return "(" + to_string(e->a) + op + to_string(e->b) + ")";
    };
    auto fn = [&](const char* name) { return std::string(name) + "(" + to_string(e->a) + ")"; };
    switch (e->op) {
        case Op::number: return fmt_complex(e->value);
        case Op::var: return "x";
        case Op::add: return bin("+");
        case Op::sub: return bin("-");
        case Op::mul: return bin("*");
        case Op::div: return bin("/");
        case Op::pow: return bin("^");
        case Op::neg: return "(-" + to_string(e->a) + ")";
        case Op::sin: return fn("sin");
        case Op::cos: return fn("cos");
        case Op::tan: return fn("tan");
        case Op::sinh: return fn("sinh");
        case Op::cosh: return fn("cosh");
        case Op::exp: return fn("exp");
        case Op::log: return fn("log");
        case Op::sqrt: return fn("sqrt");
        case Op::abs: return fn("abs");
        case Op::antideriv:
            return "integral(" + to_string(e->a) + "; x0=" + fmt_double(e->anchor) + ")";
    }
    throw Error("unreachable expression node");
}

// ---------------------------------------------------------------------------
// Polynomial detection
// ---------------------------------------------------------------------------

namespace {

constexpr std::size_t kMaxPolyDegree = 64;

using Poly = std::vector<cplx>;

std::optional<Poly> poly_of(const ExprPtr& e);

Poly trim(Poly p) {
    while (p.size() > 1 && p.back() == cplx(0, 0)) p.pop_back();
    return p;
}

std::optional<Poly> poly_mul(const Poly& a, const Poly& b) {
    if (a.size() + b.size() > kMaxPolyDegree + 1) return std::nullopt;
    Poly r(a.size() + b.size() - 1, cplx(0, 0));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
    return trim(std::move(r));
}

std::optional<Poly> poly_of(const ExprPtr& e) {
    using Op = Expr::Op;
    switch (e->op) {
        case Op::number: return Poly{e->value};
        case Op::var: return Poly{cplx(0, 0), cplx(1, 0)};
        case Op::add:
        case Op::sub: {
            auto a = poly_of(e->a), b = poly_of(e->b);
            if (!a || !b) return std::nullopt;
            Poly r = *a;
            r.resize(std::max(a->size(), b->size()), cplx(0, 0));
            for (std::size_t i = 0; i < b->size(); ++i)
                r[i] += (e->op == Op::add) ? (*b)[i] : -(*b)[i];
            return trim(std::move(r));
        }
        case Op::mul: {
            auto a = poly_of(e->a), b = poly_of(e->b);
            if (!a || !b) return std::nullopt;
            return poly_mul(*a, *b);
        }
        case Op::div: {
            auto a = poly_of(e->a), b = poly_of(e->b);
            if (!a || !b || b->size() != 1 || (*b)[0] == cplx(0, 0)) return std::nullopt;
            Poly r = *a;
            for (auto& c : r) c /= (*b)[0];
            return r;
        }
        case Op::pow: {
            auto a = poly_of(e->a);
            if (!a || e->b->op != Op::number) return std::nullopt;
            cplx c = e->b->value;
            if (c.imag() != 0.0 || c.real() < 0.0 || c.real() != std::floor(c.real()))
                return std::nullopt;
            auto m = static_cast<std::size_t>(c.real());
            if (m * (a->size() - 1) > kMaxPolyDegree) return std::nullopt;
            Poly r{cplx(1, 0)};
            for (std::size_t i = 0; i < m; ++i) {
                auto next = poly_mul(r, *a);
                if (!next) return std::nullopt;
                r = *next;
            }
            return r;
        }
        case Op::neg: {
            auto a = poly_of(e->a);
            if (!a) return std::nullopt;
            for (auto& c : *a) c = -c;
            return a;
        }
        default: return std::nullopt;
    }
}

}  // namespace

std::optional<std::vector<cplx>> as_polynomial(const ExprPtr& e) { return poly_of(e); }

ExprPtr polynomial_antiderivative(const std::vector<cplx>& coeffs) {
    ExprPtr sum = Expr::number(cplx(0, 0));
    for (std::size_t m = 0; m < coeffs.size(); ++m) {
        if (coeffs[m] == cplx(0, 0)) continue;
        cplx c = coeffs[m] / cplx(static_cast<double>(m + 1), 0.0);
        ExprPtr xp = (m == 0) ? Expr::var()
                              : Expr::binary(Expr::Op::pow, Expr::var(),
                                             Expr::number(cplx(static_cast<double>(m + 1), 0)));
        sum = c_add(sum, c_mul(Expr::number(c), xp));
    }
    return sum;
}

}  // namespace dtmm
