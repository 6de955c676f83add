#pragma once

#include <string>
#include <vector>

#include "dtmm/problem.hpp"

namespace dtmm {

/// One named identity check from the verification suite.
struct CheckResult {
    std::string name;
    bool ran = true;   // false: skipped (not applicable to this problem)
    bool pass = true;
    double deviation = 0.0;
    double tolerance = 0.0;
    std::string note;
};

/// Run the identity suite scoped to a problem: the Lagrange-inverse delta
/// identity, derivative reconstruction, transfer-matrix algebra, determinant
/// formulas, M = J + T, Abel's law for the Wronskian, the 2x2 exponential and
/// determinant-of-path-exponential identities, Vieta's formulas, oracle
/// agreement (when initial conditions are given), and singular-jump limits
/// (when singularities are present).
std::vector<CheckResult> run_checks(const ProblemFile& pf);

}  // namespace dtmm
