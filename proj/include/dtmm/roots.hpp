#pragma once

#include <optional>
#include <span>

#include "dtmm/frame.hpp"
#include "dtmm/problem.hpp"

namespace dtmm {

/// All n roots of the monic polynomial k^n + sum_m coeffs[m] k^m
/// (coeffs holds a_0..a_{n-1}), multiplicities repeated, unordered.
/// Aberth-Ehrlich iteration, warm-startable; every returned root satisfies
/// |p(k)| <= 1e-10 * (1 + max_m |a_m k^m|).
std::vector<cplx> roots_at(std::span<const cplx> coeffs,
                           std::span<const cplx> warm_start = {});

/// Effective degeneracy threshold for a frame:
/// options.degeneracy_eps * (1 + max_i |k_i|).
double degeneracy_threshold(const Problem& p, const RootFrame& fr);

/// Frame at x. Without `prev` the roots are ordered lexicographically by
/// (Re, Im); with `prev`, roots are matched to prev's slots by the
/// minimum-total-distance assignment so each slot traces a continuous branch.
/// Derivatives come from implicit differentiation of the characteristic
/// equation: k' = -(sum a_m' k^m) / (sum_{m>=1} m a_m k^(m-1)), a_n = 1.
/// Throws DegeneracyError when the gap falls below the degeneracy threshold
/// or the implicit-derivative denominator collapses.
RootFrame track_frame(const std::optional<RootFrame>& prev, const Problem& p, double x);

/// Internal knobs for callers that scan near degeneracies.
struct FramePolicy {
    bool require_nondegenerate = true;
    bool compute_droots = true;
};
RootFrame frame_at(const Problem& p, double x, const RootFrame* prev, FramePolicy policy);

/// Walk a frame from fr.x to x_target in steps of at most `step`,
/// preserving slot continuity. No transfer matrix is accumulated.
RootFrame track_to(const Problem& p, RootFrame fr, double x_target, double step);

/// Minimum pairwise distance of a root multiset (infinity for n = 1).
double min_pairwise_gap(std::span<const cplx> roots);

}  // namespace dtmm
