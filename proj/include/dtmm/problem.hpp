#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dtmm/expr.hpp"

namespace dtmm {

/// One variable coefficient a_m(x): a parsed expression plus its source text.
/// Immutable after construction; evaluation is pure and deterministic.
struct CoeffFn {
    ExprPtr expr;
    std::string source_text;

    static CoeffFn parse(std::string_view text, int line = 1, int column_offset = 0);
    static CoeffFn from_expr(ExprPtr e);

    cplx operator()(cplx x) const { return eval_expr(expr, x); }
};

enum class Method { ode, exp };

struct SolverOptions {
    /// Propagation step size; <= 0 means the default 1e-3 * (x_hi - x_lo).
    double step = 0.0;
    /// Relative degeneracy threshold: a frame is degenerate when
    /// gap < degeneracy_eps * (1 + max_i |k_i|).
    double degeneracy_eps = 1e-6;
    /// Half-width delta-x of the finite jump over a singularity; <= 0 means
    /// the default max(1e-3, step), so the band is at least one step wide.
    double jump_half_width = 0.0;
    Method method = Method::ode;
    /// Number of composite-Simpson panels used by exponential propagation.
    int quadrature_points = 256;
};

/// The homogeneous ODE sum a_m(x) f^(m) = 0 with a_n == 1, posed on a real
/// interval, plus solver options. Coefficient derivative expressions are
/// prepared once at construction (empty slots where symbolic differentiation
/// is impossible; only the differential propagation paths need them).
class Problem {
public:
    Problem(int order, std::vector<CoeffFn> coeffs, double x_lo, double x_hi,
            SolverOptions options = {});

    int order() const { return order_; }
    double x_lo() const { return x_lo_; }
    double x_hi() const { return x_hi_; }
    const SolverOptions& options() const { return options_; }
    const std::vector<CoeffFn>& coeffs() const { return coeffs_; }

    double resolved_step() const;
    double resolved_jump_half_width() const;
    bool in_domain(double x) const { return x >= x_lo_ && x <= x_hi_; }

    /// (a_0(x), ..., a_{n-1}(x)); a_n is the implicit 1.
    std::vector<cplx> eval_coeffs(cplx x) const;

    /// (a_0'(x), ..., a_{n-1}'(x)) from the symbolic derivatives.
    std::vector<cplx> eval_coeff_derivs(cplx x) const;

    Problem with_options(SolverOptions options) const;

private:
    int order_;
    std::vector<CoeffFn> coeffs_;
    std::vector<ExprPtr> coeff_derivs_;  // null where differentiation failed
    double x_lo_, x_hi_;
    SolverOptions options_;
};

/// Free-function spelling of Problem::eval_coeffs.
std::vector<cplx> eval_coeffs(const Problem& p, cplx x);

/// A parsed problem file: the Problem itself plus the optional `ic` and
/// `grid` keys that only the solve-style commands need.
struct ProblemFile {
    Problem problem;
    std::optional<std::vector<cplx>> ic;
    std::optional<int> grid;
};

/// Parse the line-oriented `key = value` problem-file format.
ProblemFile parse_problem_file(std::string_view text);

/// Parse a problem file, keeping only the Problem.
Problem parse_problem(std::string_view text);

/// The transformed problem for h(x) with vanishing a_{n-1}, where
/// f = w * h and w = exp(-(1/n) * antiderivative of a_{n-1}).
struct NormalizedForm {
    Problem problem;
    CoeffFn weight;
};
NormalizedForm normalize_form(const Problem& p);

}  // namespace dtmm
