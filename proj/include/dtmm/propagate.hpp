#pragma once

#include <utility>

#include "dtmm/jump.hpp"
#include "dtmm/problem.hpp"
#include "dtmm/roots.hpp"

namespace dtmm {

/// Transfer exponent M = integral of the kernel over [x_from, x_to], split
/// into the jump part J (integrand built from the product rule on
/// D exp(xK)) and the diagonal propagation part T = integral of K.
/// M = J + T entrywise.
struct TransferExponent {
    CMatrix M, J, T;
    double x_from = 0.0, x_to = 0.0;
};

enum class SingKind { A, B, C, unclassified };

/// An isolated degeneracy of the characteristic equation.
struct SingularityReport {
    double xi = 0.0;
    SingKind kind = SingKind::unclassified;
    double gap_at_xi = 0.0;
};

const char* to_string(SingKind k);

/// Kernel matrix U(x) = -x K' - exp(-xK) D^{-1} C K' exp(xK) built from a
/// tracked frame. For n = 2 an algebraically reduced closed form is used;
/// both constructions agree and are cross-checked in the tests.
CMatrix kernel_at(const Problem& p, const RootFrame& fr);

/// Propagate dQ/dx = U(x) Q from x1 to x2 (classical RK4 at fixed step,
/// frames tracked along the way). Refuses to cross a degenerate point.
TransferMatrix propagate_ode(const Problem& p, double x1, double x2);

/// Same, starting from an existing frame at x1; returns the exit frame so a
/// caller can keep slot continuity across consecutive segments.
TransferMatrix propagate_ode_from(const Problem& p, const RootFrame& start, double x2,
                                  RootFrame* end_frame);

/// Exponential propagation: M by composite Simpson quadrature with
/// options.quadrature_points panels, Q = mat_exp(M). Exact when U commutes
/// with M, determinant-exact always; generally an approximation.
std::pair<TransferMatrix, TransferExponent> propagate_exp(const Problem& p, double x1,
                                                          double x2);
std::pair<TransferMatrix, TransferExponent> propagate_exp_from(const Problem& p,
                                                               const RootFrame& start,
                                                               double x2,
                                                               RootFrame* end_frame);

/// Closed-form determinant of the transfer matrix from root data:
/// exp[x1 S(x1) - x2 S(x2) + integral of S] * prod_{i>j} ratios, with
/// S(x) the root sum. Reduces to the pure product when a_{n-1} == 0.
/// fr2 must be the continuation of fr1 (same slot order).
cplx transfer_det_formula(const Problem& p, const RootFrame& fr1, const RootFrame& fr2);

/// Scan [lo, hi] for isolated root-collision points: gap minima on a dense
/// grid are bracketed and refined by golden-section bisection on the gap
/// function. n = 2 singularities with a1 == 0 are classified by the sign of
/// a0 on both sides. Throws EntirelyDegenerateError when the gap stays below
/// threshold on a whole subinterval.
std::vector<SingularityReport> find_singularities(const Problem& p, double lo, double hi);
std::vector<SingularityReport> find_singularities(const Problem& p);

/// Finite jump over an isolated singularity: the frame-to-frame transfer
/// between xi - delta and xi + delta with delta = options.jump_half_width.
/// Frames are ordered by the canonical n=2 convention (slot 1 carries the
/// -j sqrt(a0) branch) so that the A/B/C limit matrices come out in their
/// reference form; propagate_robust uses its own tracked frames instead.
TransferMatrix singular_jump(const Problem& p, const SingularityReport& s);

/// Propagation over a singularity-free segment by the method selected in the
/// options (ode or exp).
TransferMatrix propagate_segment(const Problem& p, const RootFrame& start, double x2,
                                 RootFrame* end_frame);

/// Composition of ODE propagation on singularity-free segments with finite
/// jumps over each singularity, with consistent frame bookkeeping. The
/// returned exit frame (optional) is the tracked frame at x2.
TransferMatrix propagate_robust(const Problem& p, double x1, double x2);
TransferMatrix propagate_robust_from(const Problem& p, const RootFrame& start, double x2,
                                     RootFrame* end_frame);

/// Frame at x ordered by the canonical n=2 convention when applicable
/// (otherwise lexicographic); used for singular jumps and their tests.
RootFrame canonical_frame(const Problem& p, double x);

}  // namespace dtmm
