#include "dtmm/problem.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

namespace dtmm {

CoeffFn CoeffFn::parse(std::string_view text, int line, int column_offset) {
    CoeffFn c;
    c.expr = parse_expression(text, line, column_offset);
    c.source_text = std::string(text);
    return c;
}

CoeffFn CoeffFn::from_expr(ExprPtr e) {
    CoeffFn c;
    c.source_text = to_string(e);
    c.expr = std::move(e);
    return c;
}

Problem::Problem(int order, std::vector<CoeffFn> coeffs, double x_lo, double x_hi,
                 SolverOptions options)
    : order_(order), coeffs_(std::move(coeffs)), x_lo_(x_lo), x_hi_(x_hi),
      options_(options) {
    if (order_ < 1) throw Error("order must be >= 1");
    if (coeffs_.size() != static_cast<std::size_t>(order_))
        throw Error("expected " + std::to_string(order_) + " coefficients, got " +
                    std::to_string(coeffs_.size()));
    if (!(x_lo_ < x_hi_)) throw Error("empty domain: require x_lo < x_hi");
    if (!(options_.degeneracy_eps > 0.0) || options_.jump_half_width < 0.0)
        throw Error("tolerances must be strictly positive");
    if (options_.step < 0.0) throw Error("step must be positive");
    if (options_.quadrature_points < 2) throw Error("quadrature_points must be >= 2");
    coeff_derivs_.reserve(coeffs_.size());
    for (const auto& c : coeffs_) {
        try {
            coeff_derivs_.push_back(differentiate(c.expr));
        } catch (const UnsupportedCoefficientError&) {
            coeff_derivs_.push_back(nullptr);
        }
    }
}

double Problem::resolved_step() const {
    return options_.step > 0.0 ? options_.step : 1e-3 * (x_hi_ - x_lo_);
}

double Problem::resolved_jump_half_width() const {
    return options_.jump_half_width > 0.0 ? options_.jump_half_width
                                          : std::max(1e-3, resolved_step());
}

std::vector<cplx> Problem::eval_coeffs(cplx x) const {
    std::vector<cplx> out(coeffs_.size());
    for (std::size_t m = 0; m < coeffs_.size(); ++m) {
        try {
            out[m] = coeffs_[m](x);
        } catch (const EvalError& e) {
            throw EvalError("coefficient a" + std::to_string(m) + ": " + e.what(),
                            static_cast<int>(m));
        }
    }
    return out;
}

std::vector<cplx> Problem::eval_coeff_derivs(cplx x) const {
    std::vector<cplx> out(coeffs_.size());
    for (std::size_t m = 0; m < coeffs_.size(); ++m) {
        if (!coeff_derivs_[m])
            throw UnsupportedCoefficientError(
                "coefficient a" + std::to_string(m) +
                " is not symbolically differentiable; the differential "
                "propagation paths cannot be used with it");
        try {
            out[m] = eval_expr(coeff_derivs_[m], x);
        } catch (const EvalError& e) {
            throw EvalError("coefficient a" + std::to_string(m) + "': " + e.what(),
                            static_cast<int>(m));
        }
    }
    return out;
}

Problem Problem::with_options(SolverOptions options) const {
    return Problem(order_, coeffs_, x_lo_, x_hi_, options);
}

std::vector<cplx> eval_coeffs(const Problem& p, cplx x) { return p.eval_coeffs(x); }

// ---------------------------------------------------------------------------
// Problem-file parsing
// ---------------------------------------------------------------------------

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

struct RawEntry {
    std::string value;
    int line;
    int column;  // 0-based offset of the value within its line
};

// `[a, b, ...]` with expression entries; returns the entry texts.
std::vector<RawEntry> split_bracket_list(const RawEntry& e) {
    std::string_view v = trim(e.value);
    if (v.size() < 2 || v.front() != '[' || v.back() != ']')
        throw ParseError("expected a [...] list", e.line, e.column + 1);
    std::string_view body = v.substr(1, v.size() - 2);
    std::vector<RawEntry> parts;
    std::size_t start = 0;
    int depth = 0;
    for (std::size_t i = 0; i <= body.size(); ++i) {
        if (i < body.size() && body[i] == '(') ++depth;
        if (i < body.size() && body[i] == ')') --depth;
        if (i == body.size() || (body[i] == ',' && depth == 0)) {
            parts.push_back({std::string(trim(body.substr(start, i - start))), e.line,
                             e.column + static_cast<int>(start) + 1});
            start = i + 1;
        }
    }
    return parts;
}

cplx eval_constant(const RawEntry& e) {
    ExprPtr ex = parse_expression(e.value, e.line, e.column);
    return eval_expr(ex, cplx(0.0, 0.0));
}

double eval_real_constant(const RawEntry& e) {
    cplx v = eval_constant(e);
    if (v.imag() != 0.0)
        throw ParseError("expected a real value", e.line, e.column + 1);
    return v.real();
}

}  // namespace

ProblemFile parse_problem_file(std::string_view text) {
    std::map<std::string, RawEntry> entries;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        ++line_no;
        pos = eol + 1;

        std::size_t hash = line.find('#');
        if (hash != std::string_view::npos) line = line.substr(0, hash);

        // ';' separates statements within one physical line.
        std::size_t seg_start = 0;
        while (seg_start <= line.size()) {
            std::size_t seg_end = line.find(';', seg_start);
            if (seg_end == std::string_view::npos) seg_end = line.size();
            std::string_view stmt = line.substr(seg_start, seg_end - seg_start);
            std::size_t stmt_col = seg_start;
            seg_start = seg_end + 1;

            if (trim(stmt).empty()) {
                if (seg_end == line.size()) break;
                continue;
            }
            std::size_t eq = stmt.find('=');
            if (eq == std::string_view::npos)
                throw ParseError("expected 'key = value'", line_no,
                                 static_cast<int>(stmt_col) + 1);
            std::string key(trim(stmt.substr(0, eq)));
            std::string_view value_raw = stmt.substr(eq + 1);
            std::string_view value = trim(value_raw);
            int col = static_cast<int>(stmt_col + eq + 1 +
                                       static_cast<std::size_t>(value.data() - value_raw.data()));
            if (key.empty()) throw ParseError("empty key", line_no, static_cast<int>(stmt_col) + 1);
            if (value.empty())
                throw ParseError("empty value for '" + key + "'", line_no, col + 1);
            if (entries.count(key))
                throw ParseError("duplicate key '" + key + "'", line_no,
                                 static_cast<int>(stmt_col) + 1);
            entries[key] = RawEntry{std::string(value), line_no, col};
            if (seg_end == line.size()) break;
        }
        if (eol == text.size()) break;
    }

    auto take = [&](const std::string& key) -> std::optional<RawEntry> {
        auto it = entries.find(key);
        if (it == entries.end()) return std::nullopt;
        RawEntry e = it->second;
        entries.erase(it);
        return e;
    };

    auto order_e = take("order");
    if (!order_e) throw ParseError("missing 'order'", 1, 1);
    double order_v = eval_real_constant(*order_e);
    if (order_v < 1.0 || order_v != std::floor(order_v))
        throw ParseError("'order' must be a positive integer", order_e->line,
                         order_e->column + 1);
    int n = static_cast<int>(order_v);

    // Omitted a<m> keys default to the zero coefficient.
    std::vector<CoeffFn> coeffs(static_cast<std::size_t>(n));
    for (int m = 0; m < n; ++m) {
        if (auto c = take("a" + std::to_string(m)))
            coeffs[static_cast<std::size_t>(m)] = CoeffFn::parse(c->value, c->line, c->column);
        else
            coeffs[static_cast<std::size_t>(m)] = CoeffFn::parse("0");
    }
    // Any leftover a<m> key indexes at or beyond the order.
    for (const auto& [key, e] : entries) {
        if (key.size() > 1 && key[0] == 'a' &&
            std::all_of(key.begin() + 1, key.end(),
                        [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
            throw ParseError("order mismatch: coefficient '" + key +
                             "' exceeds order " + std::to_string(n),
                             e.line, 1);
    }

    auto domain_e = take("domain");
    if (!domain_e) throw ParseError("missing 'domain'", 1, 1);
    auto dom = split_bracket_list(*domain_e);
    if (dom.size() != 2)
        throw ParseError("domain must be [lo, hi]", domain_e->line, domain_e->column + 1);
    double x_lo = eval_real_constant(dom[0]);
    double x_hi = eval_real_constant(dom[1]);
    if (!(x_lo < x_hi))
        throw ParseError("empty domain: require lo < hi", domain_e->line,
                         domain_e->column + 1);

    SolverOptions opt;
    if (auto e = take("step")) {
        opt.step = eval_real_constant(*e);
        if (!(opt.step > 0.0)) throw ParseError("'step' must be > 0", e->line, e->column + 1);
    }
    if (auto e = take("degeneracy_eps")) {
        opt.degeneracy_eps = eval_real_constant(*e);
        if (!(opt.degeneracy_eps > 0.0))
            throw ParseError("'degeneracy_eps' must be > 0", e->line, e->column + 1);
    }
    if (auto e = take("jump_half_width")) {
        opt.jump_half_width = eval_real_constant(*e);
        if (!(opt.jump_half_width > 0.0))
            throw ParseError("'jump_half_width' must be > 0", e->line, e->column + 1);
    }
    if (auto e = take("method")) {
        if (e->value == "ode") opt.method = Method::ode;
        else if (e->value == "exp") opt.method = Method::exp;
        else throw ParseError("'method' must be 'ode' or 'exp'", e->line, e->column + 1);
    }

    std::optional<std::vector<cplx>> ic;
    if (auto e = take("ic")) {
        auto parts = split_bracket_list(*e);
        if (parts.size() != static_cast<std::size_t>(n))
            throw ParseError("ic must list exactly " + std::to_string(n) + " values",
                             e->line, e->column + 1);
        std::vector<cplx> v(parts.size());
        for (std::size_t i = 0; i < parts.size(); ++i) v[i] = eval_constant(parts[i]);
        ic = std::move(v);
    }

    std::optional<int> grid;
    if (auto e = take("grid")) {
        double g = eval_real_constant(*e);
        if (g < 2.0 || g != std::floor(g))
            throw ParseError("'grid' must be an integer >= 2", e->line, e->column + 1);
        grid = static_cast<int>(g);
    }

    if (!entries.empty()) {
        const auto& [key, e] = *entries.begin();
        throw ParseError("unknown key '" + key + "'", e.line, 1);
    }

    try {
        return ProblemFile{Problem(n, std::move(coeffs), x_lo, x_hi, opt), std::move(ic),
                           grid};
    } catch (const Error& err) {
        throw ParseError(err.what(), 1, 1);
    }
}

Problem parse_problem(std::string_view text) { return parse_problem_file(text).problem; }

// ---------------------------------------------------------------------------
// a_{n-1} elimination (substitution f = w * h)
// ---------------------------------------------------------------------------

namespace {

double binom(int m, int r) {
    double v = 1.0;
    for (int i = 0; i < r; ++i) v = v * static_cast<double>(m - i) / static_cast<double>(i + 1);
    return v;
}

}  // namespace

NormalizedForm normalize_form(const Problem& p) {
    const int n = p.order();
    if (n < 2) throw Error("normalize_form requires order >= 2");

    // g = w'/w = -(1/n) a_{n-1}; rho_s = w^(s)/w obeys rho_{s+1} = rho_s' + g rho_s.
    const ExprPtr a_top = p.coeffs().back().expr;
    const ExprPtr g = ex::mul(ex::num(cplx(-1.0 / n, 0.0)), a_top);
    std::vector<ExprPtr> rho(static_cast<std::size_t>(n) + 1);
    rho[0] = ex::num(cplx(1, 0));
    for (int s = 0; s < n; ++s)
        rho[static_cast<std::size_t>(s) + 1] =
            ex::add(differentiate(rho[static_cast<std::size_t>(s)]),
                    ex::mul(g, rho[static_cast<std::size_t>(s)]));

    // Substitute f = w h into sum a_m f^(m) and divide by w: the coefficient
    // of h^(r) is sum_{m>=r} C(m,r) a_m rho_{m-r}; monic since rho_0 = 1.
    std::vector<CoeffFn> transformed(static_cast<std::size_t>(n));
    for (int r = 0; r < n; ++r) {
        ExprPtr sum = ex::num(cplx(0, 0));
        for (int m = r; m <= n; ++m) {
            ExprPtr am = (m == n) ? ex::num(cplx(1, 0))
                                  : p.coeffs()[static_cast<std::size_t>(m)].expr;
            ExprPtr term = ex::mul(ex::num(cplx(binom(m, r), 0.0)),
                                   ex::mul(am, rho[static_cast<std::size_t>(m - r)]));
            sum = ex::add(sum, term);
        }
        transformed[static_cast<std::size_t>(r)] = CoeffFn::from_expr(sum);
    }

    // Weight w = exp(-(1/n) integral of a_{n-1}): symbolically when a_{n-1}
    // is polynomial (anchored at 0), by quadrature from x_lo otherwise.
    ExprPtr w_expr;
    if (auto poly = as_polynomial(a_top)) {
        for (auto& c : *poly) c *= cplx(-1.0 / n, 0.0);
        w_expr = Expr::unary(Expr::Op::exp, polynomial_antiderivative(*poly));
    } else {
        w_expr = Expr::unary(Expr::Op::exp,
                             ex::mul(ex::num(cplx(-1.0 / n, 0.0)),
                                     Expr::antiderivative(a_top, p.x_lo())));
    }

    return NormalizedForm{Problem(n, std::move(transformed), p.x_lo(), p.x_hi(), p.options()),
                          CoeffFn::from_expr(w_expr)};
}

}  // namespace dtmm
