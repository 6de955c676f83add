#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dtmm/oracle.hpp"

using namespace dtmm;

namespace {

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> xs(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) xs[std::size_t(i)] = a + (b - a) * i / (n - 1);
    xs.back() = b;
    return xs;
}

// 3x3 determinant by cofactors; keeps the Abel cross-check free of the
// library's linear algebra.
cplx det3(const cplx m[3][3]) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

}  // namespace

TEST_CASE("companion_rhs reference values") {
    SUBCASE("harmonic oscillator at the origin") {
        Problem p = parse_problem("order=2; a0=1; a1=0; domain=[0,1]");
        auto dy = companion_rhs(p, CompanionState{0.0, {cplx(0, 0), cplx(1, 0)}});
        CHECK(std::abs(dy[0] - cplx(1, 0)) < 1e-15);
        CHECK(std::abs(dy[1]) < 1e-15);
    }
    SUBCASE("first order") {
        Problem p = parse_problem("order=1; a0=2.5; domain=[0,1]");
        auto dy = companion_rhs(p, CompanionState{0.3, {cplx(2, -1)}});
        CHECK(std::abs(dy[0] - cplx(-5, 2.5)) < 1e-14);
    }
    SUBCASE("Euler-Cauchy at x=1") {
        Problem p = parse_problem("order=4; a0=-1/x^4; a1=0; a2=0; a3=0; domain=[1,2]");
        auto dy = companion_rhs(
            p, CompanionState{1.0, {cplx(1, 0), cplx(0, 0), cplx(0, 0), cplx(0, 0)}});
        CHECK(std::abs(dy[0]) < 1e-15);
        CHECK(std::abs(dy[1]) < 1e-15);
        CHECK(std::abs(dy[2]) < 1e-15);
        CHECK(std::abs(dy[3] - cplx(1, 0)) < 1e-15);
    }
}

TEST_CASE("oracle_solve closed forms") {
    SUBCASE("sine") {
        Problem p = parse_problem("order=2; a0=1; a1=0; domain=[0,6.283185307179586]");
        auto xs = linspace(0.0, 2.0 * std::numbers::pi, 41);
        SolutionGrid g =
            oracle_solve(p, 0.0, std::vector<cplx>{cplx(0, 0), cplx(1, 0)}, xs);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            CHECK(std::abs(g.values[i] - cplx(std::sin(xs[i]), 0)) < 1e-10);
            CHECK(std::abs(g.deriv(1)[i] - cplx(std::cos(xs[i]), 0)) < 1e-10);
        }
    }
    SUBCASE("Gaussian decay for f' + x f = 0") {
        Problem p = parse_problem("order=1; a0=x; domain=[0,2]");
        auto xs = linspace(0.0, 2.0, 21);
        SolutionGrid g = oracle_solve(p, 0.0, std::vector<cplx>{cplx(1, 0)}, xs);
        for (std::size_t i = 0; i < xs.size(); ++i)
            CHECK(std::abs(g.values[i] - std::exp(cplx(-0.5 * xs[i] * xs[i], 0))) < 1e-10);
    }
    SUBCASE("anchor inside the grid integrates both ways") {
        Problem p = parse_problem("order=2; a0=1; a1=0; domain=[-3,3]");
        auto xs = linspace(-3.0, 3.0, 25);
        SolutionGrid g =
            oracle_solve(p, 0.0, std::vector<cplx>{cplx(0, 0), cplx(1, 0)}, xs);
        for (std::size_t i = 0; i < xs.size(); ++i)
            CHECK(std::abs(g.values[i] - cplx(std::sin(xs[i]), 0)) < 1e-10);
    }
}

TEST_CASE("oracle Wronskian obeys Abel's law without transfer-matrix machinery") {
    Problem p = parse_problem("order=3; a0=1; a1=0; a2=x; domain=[0,2]");
    auto xs = linspace(0.0, 2.0, 21);
    std::vector<SolutionGrid> basis;
    for (int i = 0; i < 3; ++i) {
        std::vector<cplx> ic(3, cplx(0, 0));
        ic[std::size_t(i)] = cplx(1, 0);
        basis.push_back(oracle_solve(p, 0.0, ic, xs));
    }
    for (std::size_t k = 0; k < xs.size(); ++k) {
        cplx m[3][3];
        for (int i = 0; i < 3; ++i) {
            m[0][i] = basis[std::size_t(i)].values[k];
            m[1][i] = basis[std::size_t(i)].deriv(1)[k];
            m[2][i] = basis[std::size_t(i)].deriv(2)[k];
        }
        cplx W = det3(m);
        cplx want = std::exp(cplx(-0.5 * xs[k] * xs[k], 0));  // W(0) = 1
        CHECK(std::abs(W - want) < 1e-8 * std::abs(want));
    }
}

TEST_CASE("oracle input validation") {
    Problem p = parse_problem("order=2; a0=1; a1=0; domain=[0,1]");
    std::vector<double> bad{0.5, 0.5};
    CHECK_THROWS_AS(
        oracle_solve(p, 0.0, std::vector<cplx>{cplx(0, 0), cplx(1, 0)}, bad), Error);
    std::vector<double> outside{0.0, 2.0};
    CHECK_THROWS_AS(
        oracle_solve(p, 0.0, std::vector<cplx>{cplx(0, 0), cplx(1, 0)}, outside), Error);
    CHECK_THROWS_AS(oracle_solve(p, 0.0, std::vector<cplx>{cplx(1, 0)},
                                 std::vector<double>{0.0, 1.0}),
                    Error);
}
