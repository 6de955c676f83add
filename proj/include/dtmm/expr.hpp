#pragma once

#include <complex>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dtmm/errors.hpp"

namespace dtmm {

using cplx = std::complex<double>;

/// Clears a negative-zero imaginary part so that principal-branch functions
/// (sqrt, log) evaluate on the standard side of the cut for real negative
/// arguments.
inline cplx principal_input(cplx z) {
    if (z.imag() == 0.0) return cplx(z.real(), 0.0);
    return z;
}

/// Immutable expression tree over one complex variable `x`.
///
/// Grammar (deliberately small): decimal literals with an optional `j`
/// suffix for imaginary values, the names `x`, `pi`, `e`, `j`, binary
/// `+ - * / ^` (`^` right-associative), unary `-`, parentheses, and the
/// functions sin cos tan sinh cosh exp log sqrt abs. `sqrt` and `log` use
/// principal branches.
///
/// `antideriv` never comes out of the parser; it backs weight functions
/// whose antiderivative has no closed form in the grammar and evaluates by
/// adaptive quadrature from a real anchor point.
struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    enum class Op {
        number, var,
        add, sub, mul, div, pow,
        neg,
        sin, cos, tan, sinh, cosh, exp, log, sqrt, abs,
        antideriv,
    };

    Op op;
    cplx value{};        // number
    ExprPtr a, b;        // operands (b only for binary ops)
    double anchor = 0.0; // antideriv lower limit

    static ExprPtr number(cplx v);
    static ExprPtr var();
    static ExprPtr unary(Op op, ExprPtr a);
    static ExprPtr binary(Op op, ExprPtr a, ExprPtr b);
    static ExprPtr antiderivative(ExprPtr a, double anchor);
};

/// Parse an expression. Positions in errors are 1-based; `line` and
/// `column_offset` shift them when the text is a fragment of a larger file.
ExprPtr parse_expression(std::string_view text, int line = 1, int column_offset = 0);

/// Evaluate at x. Throws EvalError on division by zero or a non-finite result.
cplx eval_expr(const ExprPtr& e, cplx x);

/// Symbolic derivative with respect to x.
/// Throws UnsupportedCoefficientError for `abs`.
ExprPtr differentiate(const ExprPtr& e);

/// Canonical, fully parenthesized serialization; re-parsing it yields an
/// expression that evaluates identically.
std::string to_string(const ExprPtr& e);

/// Constant-folding expression constructors (0/1 identities collapsed).
namespace ex {
ExprPtr num(cplx v);
ExprPtr add(ExprPtr a, ExprPtr b);
ExprPtr sub(ExprPtr a, ExprPtr b);
ExprPtr mul(ExprPtr a, ExprPtr b);
ExprPtr div(ExprPtr a, ExprPtr b);
}  // namespace ex

/// Monomial coefficients (c0, c1, ...) when `e` is a polynomial in x with
/// constant coefficients; nullopt otherwise.
std::optional<std::vector<cplx>> as_polynomial(const ExprPtr& e);

/// Antiderivative of a polynomial expression, anchored so it vanishes at 0.
ExprPtr polynomial_antiderivative(const std::vector<cplx>& coeffs);

}  // namespace dtmm
