#include "dtmm/propagate.hpp"

#include <algorithm>
#include <cmath>

namespace dtmm {

namespace {

constexpr FramePolicy kScanPolicy{/*require_nondegenerate=*/false, /*compute_droots=*/false};

void check_in_domain(const Problem& p, double x, const char* what) {
    double slack = 1e-12 * (1.0 + std::abs(x));
    if (x < p.x_lo() - slack || x > p.x_hi() + slack)
        throw Error(std::string(what) + " lies outside the problem domain");
}

double relative_gap(const RootFrame& fr) {
    double kmax = 0.0;
    for (const auto& k : fr.roots) kmax = std::max(kmax, std::abs(k));
    return fr.gap / (1.0 + kmax);
}

// U for n = 2 reduced from the general construction; stays clear of the
// n x n solve and is used as the runtime fast path.
CMatrix kernel_n2(const RootFrame& fr) {
    cplx k1 = fr.roots[0], k2 = fr.roots[1];
    cplx d1 = fr.droots[0], d2 = fr.droots[1];
    cplx dk = k1 - k2;
    double x = fr.x;
    CMatrix U(2, 2);
    U(0, 0) = -(x + cplx(1, 0) / dk) * d1;
    U(0, 1) = d2 / (-dk) * std::exp(-x * dk);
    U(1, 0) = d1 / dk * std::exp(x * dk);
    U(1, 1) = -(x - cplx(1, 0) / dk) * d2;
    return U;
}

CMatrix kernel_general(const RootFrame& fr) {
    const int n = fr.order();
    auto vp = vandermonde(fr);
    CMatrix B = vp.C;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) B(i, j) *= fr.droots[std::size_t(j)];
    CMatrix Y = lu_solve(vp.D, B);
    CMatrix U(n, n);
    for (int i = 0; i < n; ++i) {
        cplx left = std::exp(-fr.x * fr.roots[std::size_t(i)]);
        for (int j = 0; j < n; ++j) {
            cplx v = -left * Y(i, j) * std::exp(fr.x * fr.roots[std::size_t(j)]);
            if (i == j) v -= fr.x * fr.droots[std::size_t(i)];
            U(i, j) = v;
        }
    }
    return U;
}

}  // namespace

CMatrix kernel_at(const Problem& p, const RootFrame& fr) {
    if (fr.gap < degeneracy_threshold(p, fr))
        throw DegeneracyError("kernel matrix is singular", fr.x, 0, 1, fr.gap);
    if (fr.droots.size() != fr.roots.size())
        throw Error("kernel_at needs a frame with root derivatives");
    const int n = fr.order();
    CMatrix U;
    if (n == 1) {
        U = CMatrix(1, 1);
        U(0, 0) = -fr.x * fr.droots[0];
    } else if (n == 2) {
        U = kernel_n2(fr);
    } else {
        U = kernel_general(fr);
    }
    if (!U.finite()) throw NumericError("non-finite kernel matrix", fr.x);
    return U;
}

// ---------------------------------------------------------------------------
// Direct integration of dQ = U Q dx
// ---------------------------------------------------------------------------

TransferMatrix propagate_ode_from(const Problem& p, const RootFrame& start, double x2,
                                  RootFrame* end_frame) {
    const double x1 = start.x;
    const int n = p.order();
    if (x1 == x2) {
        if (end_frame) *end_frame = start;
        return TransferMatrix{x1, x2, CMatrix::identity(n)};
    }
    const double base_step = p.resolved_step();
    const double dir = (x2 > x1) ? 1.0 : -1.0;

    CMatrix Q = CMatrix::identity(n);
    RootFrame fr = start;
    CMatrix U0 = kernel_at(p, fr);
    long guard = 0;
    while (fr.x != x2) {
        if (++guard > 50'000'000L)
            throw NumericError("step underflow: too many RK4 steps", fr.x);
        // Graded mesh: cap the step where the kernel is steep (it grows like
        // 1/distance towards a root collision), keeping |h U| small. No error
        // feedback, so the mesh stays deterministic.
        double h = base_step;
        double unorm = U0.max_abs();
        if (unorm * h > 0.005) h = 0.005 / unorm;
        if (h < 1e-4 * base_step)
            throw DegeneracyError(
                "kernel magnitude diverges; the interval appears to contain a "
                "singularity (use propagate_robust)", fr.x, 0, 1, fr.gap);
        double x_next = fr.x + dir * h;
        if (dir * (x2 - x_next) <= 0.0) x_next = x2;
        h = x_next - fr.x;

        RootFrame fr_mid = frame_at(p, fr.x + 0.5 * h, &fr, FramePolicy{});
        RootFrame fr_end = frame_at(p, x_next, &fr_mid, FramePolicy{});
        CMatrix Um = kernel_at(p, fr_mid);
        CMatrix Ue = kernel_at(p, fr_end);

        CMatrix k1 = U0 * Q;
        CMatrix k2 = Um * (Q + k1 * cplx(0.5 * h, 0));
        CMatrix k3 = Um * (Q + k2 * cplx(0.5 * h, 0));
        CMatrix k4 = Ue * (Q + k3 * cplx(h, 0));
        Q += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * cplx(h / 6.0, 0);

        fr = std::move(fr_end);
        U0 = std::move(Ue);
    }
    if (!Q.finite()) throw NumericError("overflow during ODE propagation", x2);
    if (end_frame) *end_frame = std::move(fr);
    return TransferMatrix{x1, x2, std::move(Q)};
}

TransferMatrix propagate_ode(const Problem& p, double x1, double x2) {
    check_in_domain(p, x1, "x1");
    check_in_domain(p, x2, "x2");
    RootFrame start = track_frame(std::nullopt, p, x1);
    return propagate_ode_from(p, start, x2, nullptr);
}

// ---------------------------------------------------------------------------
// Exponential propagation
// ---------------------------------------------------------------------------

namespace {

// Composite Simpson over [start.x, x2]; visit(frame, weight) at every node.
template <typename Visit>
RootFrame simpson_sweep(const Problem& p, const RootFrame& start, double x2, Visit&& visit) {
    const double x1 = start.x;
    const int panels = std::max(2, p.options().quadrature_points);
    const long nodes = 2L * panels;
    RootFrame fr = start;
    for (long k = 0; k <= nodes; ++k) {
        if (k > 0) {
            double xk = (k == nodes)
                            ? x2
                            : x1 + (x2 - x1) * (static_cast<double>(k) / nodes);
            fr = frame_at(p, xk, &fr, FramePolicy{});
        }
        double w = (k == 0 || k == nodes) ? 1.0 : (k % 2 ? 4.0 : 2.0);
        visit(fr, w * (x2 - x1) / (3.0 * nodes));
    }
    return fr;
}

// Integrand of the jump part: -exp(-xK) D^{-1} d/dx{D exp(xK)}, with
// d/dx{D exp(xK)} = (C K' + D (K + x K')) exp(xK). Evaluated on its own
// rather than as U - K so M = J + T stays a two-route identity.
CMatrix jump_integrand(const RootFrame& fr) {
    const int n = fr.order();
    auto vp = vandermonde(fr);
    CMatrix S(n, n);
    for (int j = 0; j < n; ++j) {
        cplx colk = fr.roots[std::size_t(j)] + fr.x * fr.droots[std::size_t(j)];
        for (int i = 0; i < n; ++i)
            S(i, j) = vp.C(i, j) * fr.droots[std::size_t(j)] + vp.D(i, j) * colk;
    }
    CMatrix Y = lu_solve(vp.D, S);
    CMatrix J(n, n);
    for (int i = 0; i < n; ++i) {
        cplx left = std::exp(-fr.x * fr.roots[std::size_t(i)]);
        for (int j = 0; j < n; ++j)
            J(i, j) = -left * Y(i, j) * std::exp(fr.x * fr.roots[std::size_t(j)]);
    }
    return J;
}

}  // namespace

std::pair<TransferMatrix, TransferExponent> propagate_exp_from(const Problem& p,
                                                               const RootFrame& start,
                                                               double x2,
                                                               RootFrame* end_frame) {
    const int n = p.order();
    const double x1 = start.x;
    TransferExponent te;
    te.x_from = x1;
    te.x_to = x2;
    te.M = CMatrix(n, n);
    te.J = CMatrix(n, n);
    te.T = CMatrix(n, n);
    if (x1 == x2) {
        if (end_frame) *end_frame = start;
        return {TransferMatrix{x1, x2, CMatrix::identity(n)}, te};
    }
    RootFrame last = simpson_sweep(p, start, x2, [&](const RootFrame& fr, double w) {
        te.M += kernel_at(p, fr) * w;
        te.J += jump_integrand(fr) * w;
        for (int i = 0; i < n; ++i) te.T(i, i) += w * fr.roots[std::size_t(i)];
    });
    if (end_frame) *end_frame = std::move(last);
    return {TransferMatrix{x1, x2, mat_exp(te.M)}, te};
}

std::pair<TransferMatrix, TransferExponent> propagate_exp(const Problem& p, double x1,
                                                          double x2) {
    check_in_domain(p, x1, "x1");
    check_in_domain(p, x2, "x2");
    RootFrame start = track_frame(std::nullopt, p, x1);
    return propagate_exp_from(p, start, x2, nullptr);
}

// ---------------------------------------------------------------------------
// Closed-form determinant
// ---------------------------------------------------------------------------

cplx transfer_det_formula(const Problem& p, const RootFrame& fr1, const RootFrame& fr2) {
    const int n = p.order();
    for (const RootFrame* fr : {&fr1, &fr2})
        if (n >= 2 && fr->gap < degeneracy_threshold(p, *fr))
            throw DegeneracyError("degenerate frame in determinant formula", fr->x, 0, 1,
                                  fr->gap);

    cplx prod(1, 0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < i; ++j)
            prod *= (fr1.roots[std::size_t(i)] - fr1.roots[std::size_t(j)]) /
                    (fr2.roots[std::size_t(i)] - fr2.roots[std::size_t(j)]);

    auto root_sum = [](const RootFrame& fr) {
        cplx s(0, 0);
        for (const auto& k : fr.roots) s += k;
        return s;
    };
    cplx integral(0, 0);
    if (fr1.x != fr2.x)
        simpson_sweep(p, fr1, fr2.x,
                      [&](const RootFrame& fr, double w) { integral += w * root_sum(fr); });
    return std::exp(fr1.x * root_sum(fr1) - fr2.x * root_sum(fr2) + integral) * prod;
}

// ---------------------------------------------------------------------------
// Singularities
// ---------------------------------------------------------------------------

const char* to_string(SingKind k) {
    switch (k) {
        case SingKind::A: return "A";
        case SingKind::B: return "B";
        case SingKind::C: return "C";
        case SingKind::unclassified: return "unclassified";
    }
    return "?";
}

namespace {

struct GapMin {
    double x;
    double g;
};

// Golden-section minimization of the (unimodal near a collision) gap curve.
template <typename F>
GapMin golden_min(F&& g, double a, double b) {
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - phi * (b - a);
    double d = a + phi * (b - a);
    double gc = g(c), gd = g(d);
    GapMin best = gc < gd ? GapMin{c, gc} : GapMin{d, gd};
    for (int it = 0; it < 200 && (b - a) > 1e-15 * (1.0 + std::abs(a) + std::abs(b)); ++it) {
        if (gc < gd) {
            b = d;
            d = c;
            gd = gc;
            c = b - phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + phi * (b - a);
            gd = g(d);
        }
        const GapMin cand = gc < gd ? GapMin{c, gc} : GapMin{d, gd};
        if (cand.g < best.g) best = cand;
    }
    return best;
}

SingKind classify(const Problem& p, double xi) {
    if (p.order() != 2) return SingKind::unclassified;
    double d = p.resolved_jump_half_width();
    cplx a0l, a1l, a0r, a1r;
    try {
        auto cl = p.eval_coeffs(cplx(xi - d, 0));
        auto cr = p.eval_coeffs(cplx(xi + d, 0));
        a0l = cl[0];
        a1l = cl[1];
        a0r = cr[0];
        a1r = cr[1];
    } catch (const EvalError&) {
        return SingKind::unclassified;
    }
    double scale = 1.0 + std::max(std::abs(a0l), std::abs(a0r));
    if (std::abs(a1l) > 1e-10 * scale || std::abs(a1r) > 1e-10 * scale)
        return SingKind::unclassified;
    if (std::abs(a0l.imag()) > 1e-10 * scale || std::abs(a0r.imag()) > 1e-10 * scale)
        return SingKind::unclassified;
    if (a0l.real() < 0.0 && a0r.real() > 0.0) return SingKind::A;
    if (a0l.real() > 0.0 && a0r.real() < 0.0) return SingKind::B;
    return SingKind::C;
}

}  // namespace

std::vector<SingularityReport> find_singularities(const Problem& p, double lo, double hi) {
    if (lo > hi) std::swap(lo, hi);
    check_in_domain(p, lo, "interval start");
    check_in_domain(p, hi, "interval end");
    if (p.order() < 2) return {};

    const double eps = p.options().degeneracy_eps;
    const double h_scan = p.resolved_step();
    const long nscan = std::max<long>(32, static_cast<long>(std::ceil((hi - lo) / h_scan)));

    std::vector<double> xs(static_cast<std::size_t>(nscan) + 1);
    std::vector<double> gs(xs.size());
    RootFrame fr;
    for (long k = 0; k <= nscan; ++k) {
        double x = (k == nscan) ? hi : lo + (hi - lo) * (static_cast<double>(k) / nscan);
        fr = frame_at(p, x, k == 0 ? nullptr : &fr, kScanPolicy);
        xs[std::size_t(k)] = x;
        gs[std::size_t(k)] = relative_gap(fr);
    }

    // A below-threshold stretch of finite width means the domain itself is
    // degenerate there, not an isolated collision.
    const double run_limit =
        std::max(10.0 * h_scan, 4.0 * p.resolved_jump_half_width());
    double run_start = 0.0;
    bool in_run = false;
    for (std::size_t k = 0; k < gs.size(); ++k) {
        if (gs[k] < eps) {
            if (!in_run) {
                in_run = true;
                run_start = xs[k];
            }
            if (xs[k] - run_start > run_limit)
                throw EntirelyDegenerateError(
                    "characteristic roots are degenerate on a whole subinterval "
                    "around x=" + std::to_string(xs[k]));
        } else {
            in_run = false;
        }
    }

    auto gap_of = [&](double x) {
        return relative_gap(frame_at(p, x, nullptr, kScanPolicy));
    };

    std::vector<SingularityReport> out;
    auto push_report = [&](double xi, double g) {
        if (g >= eps) return;
        for (const auto& r : out)
            if (std::abs(r.xi - xi) < 1e-9 * (1.0 + std::abs(xi))) return;
        out.push_back(SingularityReport{xi, classify(p, xi), g});
    };

    for (std::size_t k = 1; k + 1 < gs.size(); ++k) {
        bool is_min = gs[k] <= gs[k - 1] && gs[k] <= gs[k + 1] &&
                      (gs[k] < gs[k - 1] || gs[k] < gs[k + 1]);
        if (!is_min) continue;
        GapMin m = golden_min(gap_of, xs[k - 1], xs[k + 1]);
        push_report(m.x, m.g);
    }
    if (gs.front() < eps) push_report(xs.front(), gs.front());
    if (gs.back() < eps) push_report(xs.back(), gs.back());

    std::sort(out.begin(), out.end(),
              [](const SingularityReport& a, const SingularityReport& b) { return a.xi < b.xi; });
    return out;
}

std::vector<SingularityReport> find_singularities(const Problem& p) {
    return find_singularities(p, p.x_lo(), p.x_hi());
}

RootFrame canonical_frame(const Problem& p, double x) {
    if (p.order() != 2) return frame_at(p, x, nullptr, FramePolicy{true, true});
    auto c = p.eval_coeffs(cplx(x, 0));
    cplx s = std::sqrt(principal_input(c[0] - 0.25 * c[1] * c[1]));
    RootFrame fr;
    fr.x = x;
    fr.roots = {-0.5 * c[1] - cplx(0, 1) * s, -0.5 * c[1] + cplx(0, 1) * s};
    fr.gap = min_pairwise_gap(fr.roots);
    auto dc = p.eval_coeff_derivs(cplx(x, 0));
    fr.droots.resize(2);
    for (int i = 0; i < 2; ++i) {
        cplx k = fr.roots[std::size_t(i)];
        cplx den = 2.0 * k + c[1];
        fr.droots[std::size_t(i)] =
            (std::abs(den) < 1e-14) ? cplx(0, 0) : -(dc[0] + dc[1] * k) / den;
    }
    return fr;
}

TransferMatrix singular_jump(const Problem& p, const SingularityReport& s) {
    const double d = p.resolved_jump_half_width();
    for (const auto& other : find_singularities(p))
        if (std::abs(other.xi - s.xi) > 1e-9 * (1.0 + std::abs(s.xi)) &&
            std::abs(other.xi - s.xi) < 2.0 * d)
            throw NumericError("overlapping singularities: another collision within "
                               "2*jump_half_width of xi", s.xi);
    const double xl = s.xi - d, xr = s.xi + d;
    check_in_domain(p, xl, "xi - jump_half_width");
    check_in_domain(p, xr, "xi + jump_half_width");
    RootFrame A = canonical_frame(p, xl);
    RootFrame B = canonical_frame(p, xr);
    for (const RootFrame* fr : {&A, &B})
        if (fr->gap < degeneracy_threshold(p, *fr))
            throw DegeneracyError(
                "frame still degenerate at xi +/- jump_half_width; increase "
                "jump_half_width", fr->x, 0, 1, fr->gap);
    return TransferMatrix{xl, xr, frame_transfer(A, xl, B, xr)};
}

// ---------------------------------------------------------------------------
// Robust propagation across singularities
// ---------------------------------------------------------------------------

TransferMatrix propagate_segment(const Problem& p, const RootFrame& start, double x2,
                                 RootFrame* end_frame) {
    if (p.options().method == Method::exp)
        return propagate_exp_from(p, start, x2, end_frame).first;
    return propagate_ode_from(p, start, x2, end_frame);
}

TransferMatrix propagate_robust_from(const Problem& p, const RootFrame& start, double x2,
                                     RootFrame* end_frame) {
    const double x1 = start.x;
    const int n = p.order();
    if (x1 == x2) {
        if (end_frame) *end_frame = start;
        return TransferMatrix{x1, x2, CMatrix::identity(n)};
    }
    const double dir = (x2 > x1) ? 1.0 : -1.0;
    const double d = p.resolved_jump_half_width();

    auto sings = find_singularities(p, std::min(x1, x2), std::max(x1, x2));
    std::vector<SingularityReport> inside;
    for (const auto& s : sings) {
        if (std::abs(s.xi - x1) <= d || std::abs(s.xi - x2) <= d)
            throw NumericError("singularity within jump_half_width of an interval end",
                               s.xi);
        inside.push_back(s);
    }
    for (std::size_t i = 1; i < inside.size(); ++i)
        if (std::abs(inside[i].xi - inside[i - 1].xi) < 2.0 * d)
            throw NumericError("overlapping singularities inside the interval",
                               inside[i].xi);
    if (dir < 0) std::reverse(inside.begin(), inside.end());

    CMatrix Q = CMatrix::identity(n);
    RootFrame cur = start;
    for (const auto& s : inside) {
        double near_x = s.xi - dir * d;
        double far_x = s.xi + dir * d;
        TransferMatrix seg = propagate_segment(p, cur, near_x, &cur);
        Q = seg.Q * Q;
        // Fresh (lexicographic) branch labels beyond the collision; the jump
        // is computed between the actual frames, so the product stays
        // basis-consistent.
        RootFrame far_fr = frame_at(p, far_x, nullptr, FramePolicy{});
        Q = frame_transfer(cur, near_x, far_fr, far_x) * Q;
        cur = std::move(far_fr);
    }
    TransferMatrix seg = propagate_segment(p, cur, x2, &cur);
    Q = seg.Q * Q;
    if (end_frame) *end_frame = std::move(cur);
    return TransferMatrix{x1, x2, std::move(Q)};
}

TransferMatrix propagate_robust(const Problem& p, double x1, double x2) {
    check_in_domain(p, x1, "x1");
    check_in_domain(p, x2, "x2");
    RootFrame start = track_frame(std::nullopt, p, x1);
    return propagate_robust_from(p, start, x2, nullptr);
}

}  // namespace dtmm
