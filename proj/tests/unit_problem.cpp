#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dtmm/oracle.hpp"
#include "dtmm/problem.hpp"

using namespace dtmm;

namespace {

double dist(cplx a, cplx b) { return std::abs(a - b); }

}  // namespace

TEST_CASE("parse_problem accepts the compact form") {
    Problem p = parse_problem("order=2; a0=1; domain=[0,6.283185]");
    CHECK(p.order() == 2);
    CHECK(p.x_lo() == doctest::Approx(0.0));
    CHECK(p.x_hi() == doctest::Approx(6.283185));
    auto a = p.eval_coeffs(cplx(3, 0));
    REQUIRE(a.size() == 2);
    CHECK(dist(a[0], cplx(1, 0)) < 1e-15);
    CHECK(dist(a[1], cplx(0, 0)) < 1e-15);
}

TEST_CASE("parse_problem line-oriented file with comments and options") {
    const char* text =
        "# Airy-type problem\n"
        "order = 2\n"
        "a0 = x\n"
        "a1 = 0\n"
        "domain = [-2, 2]\n"
        "ic = [1, 0]\n"
        "grid = 11\n"
        "step = 0.001\n"
        "method = exp\n"
        "degeneracy_eps = 1e-7\n"
        "jump_half_width = 2e-3\n";
    ProblemFile pf = parse_problem_file(text);
    CHECK(pf.problem.order() == 2);
    CHECK(pf.problem.options().method == Method::exp);
    CHECK(pf.problem.options().step == doctest::Approx(1e-3));
    CHECK(pf.problem.options().degeneracy_eps == doctest::Approx(1e-7));
    CHECK(pf.problem.options().jump_half_width == doctest::Approx(2e-3));
    REQUIRE(pf.ic.has_value());
    CHECK(pf.ic->size() == 2);
    CHECK(pf.grid == 11);
    CHECK(dist(pf.problem.eval_coeffs(cplx(2, 0))[0], cplx(2, 0)) < 1e-15);
}

TEST_CASE("parse_problem defaults") {
    Problem p = parse_problem("order=1; a0=x; domain=[0,1]");
    CHECK(p.options().method == Method::ode);
    CHECK(p.options().degeneracy_eps == doctest::Approx(1e-6));
    CHECK(p.resolved_jump_half_width() == doctest::Approx(1e-3));
    CHECK(p.resolved_step() == doctest::Approx(1e-3));  // 1e-3 * domain length
}

TEST_CASE("omitted coefficients default to zero") {
    Problem p = parse_problem("order=4; a0=-1/x^4; domain=[1,2]");
    auto a = p.eval_coeffs(cplx(1.5, 0));
    CHECK(std::abs(a[1]) == 0.0);
    CHECK(std::abs(a[2]) == 0.0);
    CHECK(std::abs(a[3]) == 0.0);
}

TEST_CASE("problem file errors") {
    CHECK_THROWS_AS(parse_problem("a0=1; domain=[0,1]"), ParseError);  // no order
    CHECK_THROWS_AS(parse_problem("order=1; a0=1; a1=2; domain=[0,1]"), ParseError);
    CHECK_THROWS_AS(parse_problem("order=1; a0=1; domain=[1,1]"), ParseError); // empty domain
    CHECK_THROWS_AS(parse_problem("order=1; a0=1; domain=[2,1]"), ParseError);
    CHECK_THROWS_AS(parse_problem("order=1; a0=1; a0=2; domain=[0,1]"), ParseError);
    CHECK_THROWS_AS(parse_problem("order=1; a0=1; domain=[0,1]; bogus=3"), ParseError);
    CHECK_THROWS_AS(parse_problem("order=1; a0=1; domain=[0,1]; method=rk"), ParseError);
    CHECK_THROWS_AS(parse_problem("order=1; a0=(; domain=[0,1]"), ParseError);
    CHECK_THROWS_AS(parse_problem("order=2; a0=1; a1=0; domain=[0,1]; ic=[1]"), ParseError);
    try {
        parse_problem_file("order = 2\na0 = 1\na1 = @\ndomain=[0,1]\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 3);
    }
}

TEST_CASE("ic accepts complex literals") {
    ProblemFile pf =
        parse_problem_file("order=2; a0=1; a1=0; domain=[0,1]; ic=[1+2j, -j]");
    REQUIRE(pf.ic.has_value());
    CHECK(dist((*pf.ic)[0], cplx(1, 2)) < 1e-15);
    CHECK(dist((*pf.ic)[1], cplx(0, -1)) < 1e-15);
}

TEST_CASE("domain bounds may use pi") {
    Problem p = parse_problem("order=2; a0=1; domain=[0, 2*pi]");
    CHECK(p.x_hi() == doctest::Approx(2 * std::numbers::pi));
}

TEST_CASE("eval_coeffs examples") {
    Problem airy = parse_problem("order=2; a0=x; a1=0; domain=[-2,2]");
    CHECK(dist(airy.eval_coeffs(cplx(2, 0))[0], cplx(2, 0)) < 1e-15);

    Problem ec = parse_problem("order=4; a0=-1/x^4; a1=0; a2=0; a3=0; domain=[1,2]");
    auto a = ec.eval_coeffs(cplx(1, 0));
    CHECK(dist(a[0], cplx(-1, 0)) < 1e-15);
    CHECK(dist(a[1], cplx(0, 0)) < 1e-15);
    CHECK(dist(a[2], cplx(0, 0)) < 1e-15);
    CHECK(dist(a[3], cplx(0, 0)) < 1e-15);

    Problem s = parse_problem("order=1; a0=2+sin(x); domain=[0,1]");
    CHECK(dist(s.eval_coeffs(cplx(0, 0))[0], cplx(2, 0)) < 1e-15);
}

TEST_CASE("eval_coeffs reports the offending coefficient") {
    Problem p = parse_problem("order=2; a0=1/x; a1=0; domain=[-1,1]");
    try {
        p.eval_coeffs(cplx(0, 0));
        FAIL("expected EvalError");
    } catch (const EvalError& e) {
        CHECK(e.coeff_index == 0);
    }
}

TEST_CASE("normalize_form leaves a clean problem alone") {
    Problem p = parse_problem("order=2; a0=2+sin(x); a1=0; domain=[0,1]");
    NormalizedForm nf = normalize_form(p);
    for (double x : {0.0, 0.3, 0.9}) {
        auto a = nf.problem.eval_coeffs(cplx(x, 0));
        CHECK(dist(a[1], cplx(0, 0)) < 1e-15);
        CHECK(dist(a[0], p.eval_coeffs(cplx(x, 0))[0]) < 1e-12);
        CHECK(dist(nf.weight(cplx(x, 0)), cplx(1, 0)) < 1e-15);
    }
}

TEST_CASE("normalize_form with constant a1 = 2c") {
    // f'' + 2c f' + c^2 f = 0 with f = exp(-c x) h becomes h'' = 0.
    const double c = 0.75;
    Problem p = parse_problem("order=2; a0=0.5625; a1=1.5; domain=[0,2]");
    NormalizedForm nf = normalize_form(p);
    for (double x : {0.0, 0.7, 1.9}) {
        auto a = nf.problem.eval_coeffs(cplx(x, 0));
        CHECK(std::abs(a[1]) < 1e-12);
        CHECK(std::abs(a[0]) < 1e-12);
        CHECK(dist(nf.weight(cplx(x, 0)), cplx(std::exp(-c * x), 0)) < 1e-14);
    }
    // Weight survives the grammar round trip.
    CoeffFn re = CoeffFn::parse(nf.weight.source_text);
    CHECK(dist(re(cplx(1.3, 0)), nf.weight(cplx(1.3, 0))) == 0.0);
}

TEST_CASE("normalize_form kills a1 = x on a grid") {
    Problem p = parse_problem("order=2; a0=1+x^2; a1=x; domain=[-1,1]");
    NormalizedForm nf = normalize_form(p);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        double x = -1.0 + 2.0 * i / 99.0;
        worst = std::max(worst, std::abs(nf.problem.eval_coeffs(cplx(x, 0))[1]));
    }
    CHECK(worst < 1e-12);
    // w = exp(-x^2/4)
    CHECK(dist(nf.weight(cplx(0.8, 0)), cplx(std::exp(-0.16), 0)) < 1e-14);
}

TEST_CASE("normalize_form solutions correspond through the weight") {
    Problem p = parse_problem("order=2; a0=1+x^2; a1=x; domain=[0,1.5]");
    NormalizedForm nf = normalize_form(p);

    const double x0 = 0.0;
    std::vector<cplx> f_ic{cplx(1, 0), cplx(0.5, 0)};
    // h = f/w, h' = (f' - w' h)/w with w(x0) = 1, w'(x0) = -(1/2) a1(x0) = 0.
    ExprPtr dw = differentiate(nf.weight.expr);
    cplx w0 = nf.weight(cplx(x0, 0));
    cplx dw0 = eval_expr(dw, cplx(x0, 0));
    cplx h0 = f_ic[0] / w0;
    cplx dh0 = (f_ic[1] - dw0 * h0) / w0;

    std::vector<double> xs;
    for (int i = 0; i <= 30; ++i) xs.push_back(1.5 * i / 30.0);
    SolutionGrid f = oracle_solve(p, x0, f_ic, xs);
    SolutionGrid h = oracle_solve(nf.problem, x0, std::vector<cplx>{h0, dh0}, xs);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        cplx wh = nf.weight(cplx(xs[i], 0)) * h.values[i];
        CHECK(dist(wh, f.values[i]) < 1e-6 * (1.0 + std::abs(f.values[i])));
    }
}

TEST_CASE("normalize_form corresponds at third order too") {
    Problem p = parse_problem("order=3; a0=1+x^2/9; a1=x/2; a2=x; domain=[0,1.5]");
    NormalizedForm nf = normalize_form(p);
    for (double x : {0.2, 0.8, 1.4})
        CHECK(std::abs(nf.problem.eval_coeffs(cplx(x, 0))[2]) < 1e-12);

    const double x0 = 0.0;
    std::vector<cplx> f_ic{cplx(1, 0), cplx(0.3, 0), cplx(-0.2, 0)};
    ExprPtr dw = differentiate(nf.weight.expr);
    ExprPtr ddw = differentiate(dw);
    cplx w0 = nf.weight(cplx(x0, 0));
    cplx w1 = eval_expr(dw, cplx(x0, 0));
    cplx w2 = eval_expr(ddw, cplx(x0, 0));
    cplx h0 = f_ic[0] / w0;
    cplx h1 = (f_ic[1] - w1 * h0) / w0;
    cplx h2 = (f_ic[2] - w2 * h0 - 2.0 * w1 * h1) / w0;

    std::vector<double> xs;
    for (int i = 0; i <= 30; ++i) xs.push_back(1.5 * i / 30.0);
    SolutionGrid f = oracle_solve(p, x0, f_ic, xs);
    SolutionGrid h = oracle_solve(nf.problem, x0, std::vector<cplx>{h0, h1, h2}, xs);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        cplx wh = nf.weight(cplx(xs[i], 0)) * h.values[i];
        CHECK(std::abs(wh - f.values[i]) < 1e-6 * (1.0 + std::abs(f.values[i])));
    }
}

TEST_CASE("normalize_form with non-polynomial a1 falls back to quadrature") {
    Problem p = parse_problem("order=2; a0=1; a1=sin(x); domain=[0,2]");
    NormalizedForm nf = normalize_form(p);
    // w = exp(-(1/2) integral_0^x sin) = exp((cos x - 1)/2)
    for (double x : {0.4, 1.1, 1.9})
        CHECK(dist(nf.weight(cplx(x, 0)), cplx(std::exp(0.5 * (std::cos(x) - 1)), 0)) <
              1e-10);
    auto a = nf.problem.eval_coeffs(cplx(0.7, 0));
    CHECK(std::abs(a[1]) < 1e-12);
}

TEST_CASE("normalize_form requires order >= 2 and differentiability") {
    CHECK_THROWS_AS(normalize_form(parse_problem("order=1; a0=x; domain=[0,1]")), Error);
    CHECK_THROWS_AS(
        normalize_form(parse_problem("order=2; a0=1; a1=abs(x); domain=[0,1]")),
        UnsupportedCoefficientError);
}
