#pragma once

#include <vector>

#include "dtmm/expr.hpp"

namespace dtmm {

/// The n tracked characteristic roots k_i(x) at one point, in continuation
/// order (the slot order fixed at the seeding point and preserved along x),
/// together with their derivatives and the minimum pairwise distance.
struct RootFrame {
    double x = 0.0;
    std::vector<cplx> roots;
    std::vector<cplx> droots;
    double gap = 0.0;

    int order() const { return static_cast<int>(roots.size()); }
};

/// Phi_i = x * k_i(x).
std::vector<cplx> phase_vector(const RootFrame& fr);

}  // namespace dtmm
