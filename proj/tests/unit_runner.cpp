#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dtmm/runner.hpp"

using namespace dtmm;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    std::string path = "runner_" + name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const char* kHarmonic =
    "order = 2\n"
    "a0 = 1\n"
    "a1 = 0\n"
    "domain = [0, 2*pi]\n"
    "ic = [0, 1]\n"
    "grid = 101\n";

std::string diag(const RunReport& rep, const std::string& key) {
    for (const auto& [k, v] : rep.diagnostics)
        if (k == key) return v;
    return {};
}

}  // namespace

TEST_CASE("cmd_solve writes a sine table") {
    std::string prob = write_temp("harmonic.prob", kHarmonic);
    CliFlags flags;
    flags.oracle = true;
    RunReport rep = cmd_solve(prob, "runner_harmonic.csv", flags);
    REQUIRE(rep.outputs.size() == 1);
    CHECK(rep.command == "solve");
    CHECK(!rep.input_digest.empty());
    CHECK(std::stod(diag(rep, "max_oracle_rel_err")) < 1e-8);
    CHECK(diag(rep, "singularities") == "none");

    std::string csv = slurp("runner_harmonic.csv");
    CHECK(csv.rfind("x,re_f,im_f,gap\n", 0) == 0);
    // Spot-check one row: x = pi/2 lands on row 26 of the 101-point grid.
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);
    for (int i = 0; i <= 25; ++i) std::getline(lines, line);
    double x, re;
    std::sscanf(line.c_str(), "%lf,%lf", &x, &re);
    CHECK(std::abs(std::sin(x) - re) < 1e-8);
}

TEST_CASE("solve output is byte-identical across runs") {
    std::string prob = write_temp("det.prob", kHarmonic);
    CliFlags flags;
    cmd_solve(prob, "runner_det_a.csv", flags);
    cmd_solve(prob, "runner_det_b.csv", flags);
    CHECK(slurp("runner_det_a.csv") == slurp("runner_det_b.csv"));
}

TEST_CASE("cmd_solve failure modes") {
    CliFlags flags;
    SUBCASE("malformed file leaves no output") {
        std::string prob = write_temp("bad.prob", "order=2\na0=1\n");
        std::remove("runner_none.csv");
        CHECK_THROWS_AS(cmd_solve(prob, "runner_none.csv", flags), ParseError);
        std::ifstream probe("runner_none.csv");
        CHECK(!probe.good());
    }
    SUBCASE("missing ic or grid is a parse error") {
        std::string no_ic = write_temp(
            "noic.prob", "order=1; a0=x; domain=[0,1]; grid=11");
        CHECK_THROWS_AS(cmd_solve(no_ic, "runner_none.csv", flags), ParseError);
        std::string no_grid =
            write_temp("nogrid.prob", "order=1; a0=x; domain=[0,1]; ic=[1]");
        CHECK_THROWS_AS(cmd_solve(no_grid, "runner_none.csv", flags), ParseError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(cmd_solve("does_not_exist.prob", "runner_none.csv", flags),
                        ParseError);
    }
    SUBCASE("entirely degenerate domain maps to exit 3") {
        std::string prob = write_temp(
            "degen.prob", "order=2; a0=0; a1=0; domain=[0,1]; ic=[1,0]; grid=11");
        try {
            cmd_solve(prob, "runner_none.csv", flags);
            FAIL("expected EntirelyDegenerateError");
        } catch (const std::exception& e) {
            CHECK(exit_code_for(e) == 3);
        }
    }
}

TEST_CASE("exit code mapping") {
    CHECK(exit_code_for(ParseError("x", 1, 1)) == 1);
    CHECK(exit_code_for(NumericError("x")) == 2);
    CHECK(exit_code_for(DegeneracyError("x", 0, 0, 1, 0.0)) == 2);
    CHECK(exit_code_for(EntirelyDegenerateError("x")) == 3);
}

TEST_CASE("cmd_transfer identity and Euler-Cauchy") {
    SUBCASE("x1 == x2 gives the identity with zero deviation") {
        std::string prob = write_temp("t1.prob", kHarmonic);
        std::string table;
        RunReport rep = cmd_transfer(prob, 1.0, 1.0, CliFlags{}, &table);
        CHECK(std::stod(diag(rep, "det_rel_dev")) < 1e-12);
        CHECK(table.find("0,0,1,") != std::string::npos);
        CHECK(table.find("0,1,0,") != std::string::npos);
    }
    SUBCASE("Euler-Cauchy 1 to 2 has determinant 64") {
        std::string prob = write_temp(
            "ec.prob", "order=4; a0=-1/x^4; a1=0; a2=0; a3=0; domain=[1,2]");
        RunReport rep = cmd_transfer(prob, 1.0, 2.0, CliFlags{}, nullptr);
        std::string d = diag(rep, "det_numeric");
        double re = std::stod(d);
        CHECK(std::abs(re - 64.0) < 1e-4 * 64.0);
        CHECK(std::stod(diag(rep, "det_rel_dev")) < 1e-6);
    }
    SUBCASE("n=2 det follows k(0)/k(1)") {
        std::string prob = write_temp(
            "ks.prob", "order=2; a0=2+sin(x); a1=0; domain=[0,1]");
        RunReport rep = cmd_transfer(prob, 0.0, 1.0, CliFlags{}, nullptr);
        double want = std::sqrt(2.0) / std::sqrt(2.0 + std::sin(1.0));
        CHECK(std::abs(std::stod(diag(rep, "det_numeric")) - want) < 1e-6);
        CHECK(std::stod(diag(rep, "det_rel_dev")) < 1e-6);
    }
}

TEST_CASE("cmd_singularities reports the Airy turning point") {
    std::string prob = write_temp(
        "airy.prob", "order=2; a0=x; a1=0; domain=[-2,2]; ic=[1,0]; grid=41");
    std::string table;
    RunReport rep = cmd_singularities(prob, CliFlags{}, &table);
    CHECK(diag(rep, "count") == "1");
    CHECK(diag(rep, "singularities").find("kind=A") != std::string::npos);
    CHECK(table.rfind("xi,kind,gap\n", 0) == 0);
    CHECK(table.find(",A,") != std::string::npos);
}

TEST_CASE("cmd_basis emits the basis and the Wronskian") {
    std::string prob = write_temp("basis.prob", kHarmonic);
    RunReport rep = cmd_basis(prob, "runner_basis.csv", CliFlags{});
    CHECK(std::stod(diag(rep, "abel_max_rel_dev")) < 1e-7);
    std::string csv = slurp("runner_basis.csv");
    CHECK(csv.rfind("x,re_g1,im_g1,re_g2,im_g2,re_w,im_w\n", 0) == 0);
}

TEST_CASE("cmd_verify passes on the harmonic problem") {
    std::string prob = write_temp("verify.prob", kHarmonic);
    std::string table;
    RunReport rep = cmd_verify(prob, CliFlags{}, &table);
    CHECK(rep.ok);
    CHECK(diag(rep, "failed") == "0");
    CHECK(table.find("lagrange_inverse_identity,pass") != std::string::npos);
    CHECK(table.find("abel_wronskian,pass") != std::string::npos);
    CHECK(table.find("det_formula,pass") != std::string::npos);
    CHECK(table.find("singularity_jump_limit,skip") != std::string::npos);
}

TEST_CASE("cmd_solve reports singularities and the jump-skip size") {
    std::string prob = write_temp(
        "airy_solve.prob", "order=2; a0=x; a1=0; domain=[-2,2]; ic=[1,0]; grid=81");
    CliFlags flags;
    RunReport rep = cmd_solve(prob, "runner_airy.csv", flags);
    CHECK(diag(rep, "singularities").find("kind=A") != std::string::npos);
    CHECK(!diag(rep, "jump_skip_estimate.0").empty());
    CHECK(std::stod(diag(rep, "jump_skip_estimate.0")) < 0.1);
}

TEST_CASE("cmd_verify passes on the Euler-Cauchy problem") {
    std::string prob = write_temp(
        "verify_ec.prob",
        "order=4; a0=-1/x^4; domain=[1,2]; ic=[1,0,0,0]; grid=41");
    std::string table;
    RunReport rep = cmd_verify(prob, CliFlags{}, &table);
    CHECK(rep.ok);
    CHECK(table.find("abel_wronskian,pass") != std::string::npos);
    CHECK(table.find("det_formula,pass") != std::string::npos);
}

TEST_CASE("cmd_verify covers the singular Airy case") {
    std::string prob = write_temp(
        "verify_airy.prob", "order=2; a0=x; a1=0; domain=[-2,2]; ic=[1,0]; grid=41");
    std::string table;
    RunReport rep = cmd_verify(prob, CliFlags{}, &table);
    CHECK(rep.ok);
    CHECK(table.find("singularity_jump_limit,pass") != std::string::npos);
}

TEST_CASE("method and step overrides reach the solver") {
    std::string prob = write_temp("ov.prob", kHarmonic);
    CliFlags flags;
    flags.method = Method::exp;
    flags.step = 0.01;
    RunReport rep = cmd_solve(prob, "runner_ov.csv", flags);
    CHECK(diag(rep, "method") == "exp");
}
