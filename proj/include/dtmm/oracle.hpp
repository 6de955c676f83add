#pragma once

#include "dtmm/problem.hpp"
#include "dtmm/solution.hpp"

namespace dtmm {

/// State of the classical first-order reduction: y = (f, f', ..., f^(n-1)).
struct CompanionState {
    double x = 0.0;
    std::vector<cplx> y;
};

/// y_i' = y_{i+1} for i < n-1; y_{n-1}' = -sum_m a_m(x) y_m.
std::vector<cplx> companion_rhs(const Problem& p, const CompanionState& s);

/// Independent reference solver: fixed-step RK4 on the companion system,
/// refined by step halving until two successive levels agree to relative
/// 1e-10 (throws NumericError at the step floor otherwise). Returns values
/// and all n-1 derivatives. Shares nothing with the transfer-matrix path
/// except coefficient evaluation.
SolutionGrid oracle_solve(const Problem& p, double x0, std::span<const cplx> derivs,
                          std::span<const double> xs);

}  // namespace dtmm
