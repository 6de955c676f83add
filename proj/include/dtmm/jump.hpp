#pragma once

#include <span>

#include "dtmm/cmatrix.hpp"

namespace dtmm {

/// Envelope map F(x_to) = Q F(x_from) between two points.
struct TransferMatrix {
    double x_from = 0.0;
    double x_to = 0.0;
    CMatrix Q;
};

/// One layer of a stepwise-constant stack: the roots are constant inside it.
struct Layer {
    double x_lo, x_hi;
    RootFrame frame;
};

/// Envelope transfer between two frames at possibly different positions:
/// exp(-x_b K_B) D_B^{-1} D_A exp(x_a K_A), computed by solving
/// D_B Y = D_A rather than forming the inverse.
CMatrix frame_transfer(const RootFrame& A, double x_a, const RootFrame& B, double x_b);

/// Jump transfer matrix across a coefficient discontinuity at X (zero width:
/// x_from == x_to == X). Throws DegeneracyError naming the degenerate side.
TransferMatrix jump_matrix(const RootFrame& frameA, const RootFrame& frameB, double X);

/// Closed-form determinant of jump_matrix:
/// exp[X (sum k_A - sum k_B)] * prod_{i>j} (k_Ai - k_Aj)/(k_Bi - k_Bj).
cplx jump_det(const RootFrame& frameA, const RootFrame& frameB, double X);

/// Product of chained transfers in application order (last applied leftmost).
/// Consecutive endpoints must chain within 1e-12.
TransferMatrix compose_transfers(std::span<const TransferMatrix> transfers);

/// Transfer across a contiguous ordered stack. Envelopes are constant inside
/// a layer, so interior propagation is the identity and only the interface
/// jumps contribute.
TransferMatrix layered_transfer(std::span<const Layer> layers);

}  // namespace dtmm
