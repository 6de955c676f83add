#pragma once

#include <span>
#include <vector>

namespace dtmm {

/// Finite-difference weights for the m-th derivative at x0 on the given
/// nodes (Fornberg's recursion). nodes.size() must exceed m.
std::vector<double> fd_weights(double x0, std::span<const double> nodes, int m);

}  // namespace dtmm
