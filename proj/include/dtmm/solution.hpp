#pragma once

#include "dtmm/propagate.hpp"

namespace dtmm {

/// Envelope vector F at one point.
struct Envelope {
    double x = 0.0;
    std::vector<cplx> F;
};

/// Sampled solution with optional derivative orders, envelopes, and per-point
/// diagnostics. derivs[m-1] holds f^(m) for m = 1..n-1 when requested.
struct SolutionGrid {
    std::vector<double> xs;
    std::vector<cplx> values;
    std::vector<std::vector<cplx>> derivs;
    std::vector<Envelope> envelopes;
    struct Diagnostics {
        std::vector<double> gap;           // frame gap at each sample
        std::vector<double> ode_residual;  // relative FD residual, NaN at edges
    } diagnostics;

    /// f^(m) samples; m = 0 returns values.
    std::span<const cplx> deriv(int m) const;
};

/// Convert classical initial data (f, f', ..., f^(n-1)) at x0 into the
/// envelope vector: solve D exp(x0 K) F = derivs through the Lagrange-form
/// Vandermonde inverse.
Envelope ic_to_envelope(const Problem& p, double x0, std::span<const cplx> derivs);
Envelope ic_to_envelope(const Problem& p, const RootFrame& fr, std::span<const cplx> derivs);

/// f^(m)(x) = exp(Phi)^t K^m F for 0 <= m <= n-1.
cplx reconstruct(const Envelope& e, const RootFrame& fr, int m);

/// Propagate the initial envelope across the sorted sample points, jumping
/// over isolated singularities, and reconstruct values (and derivatives up to
/// n-1 when requested). Sample points inside a jump band get linearly
/// interpolated band-edge reconstructions; the gap diagnostic flags them.
SolutionGrid solve_grid(const Problem& p, double x0, std::span<const cplx> derivs,
                        std::span<const double> xs, bool with_derivatives = true);

/// Propagate the n canonical unit envelopes F_i(x0) = e_i; the resulting
/// solutions carry derivatives and a nonzero Wronskian at every sample point
/// (checked).
std::vector<SolutionGrid> fundamental_basis(const Problem& p, double x0,
                                            std::span<const double> xs);

/// Wronskian of a fundamental basis against the closed form
/// W(x_ref) * exp(-integral of a_{n-1}).
struct AbelReport {
    std::vector<cplx> wronskian;
    std::vector<cplx> predicted;
    double max_rel_dev = 0.0;
};
AbelReport wronskian_abel(const Problem& p, const std::vector<SolutionGrid>& basis,
                          double x_ref);

}  // namespace dtmm
