#include "dtmm/solution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dtmm/finite_diff.hpp"

namespace dtmm {

std::span<const cplx> SolutionGrid::deriv(int m) const {
    if (m == 0) return values;
    if (m < 0 || static_cast<std::size_t>(m) > derivs.size())
        throw Error("derivative order " + std::to_string(m) + " not stored");
    return derivs[static_cast<std::size_t>(m) - 1];
}

Envelope ic_to_envelope(const Problem& p, const RootFrame& fr, std::span<const cplx> derivs) {
    const int n = p.order();
    if (derivs.size() != static_cast<std::size_t>(n))
        throw Error("ic_to_envelope expects " + std::to_string(n) + " derivative values");
    if (n >= 2 && fr.gap < degeneracy_threshold(p, fr))
        throw DegeneracyError("cannot form an envelope on a degenerate frame; "
                              "shift the anchor point", fr.x, 0, 1, fr.gap);
    CMatrix G = vandermonde_inverse(fr);
    Envelope e;
    e.x = fr.x;
    e.F.assign(static_cast<std::size_t>(n), cplx(0, 0));
    for (int i = 0; i < n; ++i) {
        cplx s(0, 0);
        for (int j = 0; j < n; ++j) s += G(i, j) * derivs[std::size_t(j)];
        e.F[std::size_t(i)] = std::exp(-fr.x * fr.roots[std::size_t(i)]) * s;
    }
    return e;
}

Envelope ic_to_envelope(const Problem& p, double x0, std::span<const cplx> derivs) {
    return ic_to_envelope(p, track_frame(std::nullopt, p, x0), derivs);
}

cplx reconstruct(const Envelope& e, const RootFrame& fr, int m) {
    const int n = fr.order();
    if (m < 0 || m > n - 1)
        throw Error("reconstruct: derivative order " + std::to_string(m) +
                    " out of range [0, " + std::to_string(n - 1) + "]");
    if (std::abs(fr.x - e.x) > 1e-12 * (1.0 + std::abs(fr.x)))
        throw Error("reconstruct: envelope and frame sit at different points");
    cplx s(0, 0);
    for (int i = 0; i < n; ++i) {
        cplx k = fr.roots[std::size_t(i)];
        cplx kp(1, 0);
        for (int t = 0; t < m; ++t) kp *= k;
        s += std::exp(fr.x * k) * kp * e.F[std::size_t(i)];
    }
    return s;
}

// ---------------------------------------------------------------------------
// Grid sweep
// ---------------------------------------------------------------------------

namespace {

struct NodeState {
    RootFrame frame;
    CMatrix carry;  // transfer from the anchor, n x n_cols
};

cplx recon_col(const RootFrame& fr, const CMatrix& carry, int col, int m) {
    cplx s(0, 0);
    for (int r = 0; r < fr.order(); ++r) {
        cplx k = fr.roots[std::size_t(r)];
        cplx kp(1, 0);
        for (int t = 0; t < m; ++t) kp *= k;
        s += std::exp(fr.x * k) * kp * carry(r, col);
    }
    return s;
}

NodeState advance(const Problem& p, NodeState cur, double x) {
    if (x == cur.frame.x) return cur;
    RootFrame out;
    TransferMatrix seg = propagate_segment(p, cur.frame, x, &out);
    return NodeState{std::move(out), seg.Q * cur.carry};
}

// Walk the anchor state across travel-ordered targets, jumping over the
// listed singularities. emit_direct(idx, state); emit_band(idx, x, left edge
// state at xi-d, right edge state at xi+d).
template <typename EmitDirect, typename EmitBand>
void sweep_targets(const Problem& p, NodeState cur,
                   const std::vector<std::pair<double, std::size_t>>& targets, double dir,
                   const std::vector<SingularityReport>& sings, EmitDirect&& emit_direct,
                   EmitBand&& emit_band) {
    const double d = p.resolved_jump_half_width();
    auto s_of = [dir](double x) { return dir * x; };
    std::size_t ti = 0;

    for (const auto& sing : sings) {
        while (ti < targets.size() && s_of(targets[ti].first) <= s_of(sing.xi) - d) {
            cur = advance(p, std::move(cur), targets[ti].first);
            emit_direct(targets[ti].second, cur);
            ++ti;
        }
        if (ti == targets.size()) return;

        const double entry_x = sing.xi - dir * d;
        const double exit_x = sing.xi + dir * d;
        cur = advance(p, std::move(cur), entry_x);
        RootFrame far_fr = frame_at(p, exit_x, nullptr, FramePolicy{});
        NodeState exit_state{far_fr,
                             frame_transfer(cur.frame, entry_x, far_fr, exit_x) * cur.carry};

        while (ti < targets.size() && std::abs(targets[ti].first - sing.xi) < d) {
            const NodeState& left = (dir > 0) ? cur : exit_state;
            const NodeState& right = (dir > 0) ? exit_state : cur;
            emit_band(targets[ti].second, targets[ti].first, left, right);
            ++ti;
        }
        cur = std::move(exit_state);
    }
    while (ti < targets.size()) {
        cur = advance(p, std::move(cur), targets[ti].first);
        emit_direct(targets[ti].second, cur);
        ++ti;
    }
}

struct SweepPlan {
    std::vector<std::pair<double, std::size_t>> right, left;  // travel-ordered
    std::vector<SingularityReport> sings_right, sings_left;
};

SweepPlan plan_sweeps(const Problem& p, double x0, std::span<const double> xs) {
    if (xs.empty()) throw Error("empty sample grid");
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i > 0 && !(xs[i] > xs[i - 1]))
            throw Error("sample points must be strictly increasing");
        if (!p.in_domain(xs[i]))
            throw Error("sample point x=" + std::to_string(xs[i]) +
                        " lies outside the problem domain");
    }
    if (!p.in_domain(x0)) throw Error("anchor point lies outside the problem domain");

    const double lo = std::min(xs.front(), x0), hi = std::max(xs.back(), x0);
    auto sings = find_singularities(p, lo, hi);
    const double d = p.resolved_jump_half_width();
    for (const auto& s : sings)
        if (std::abs(s.xi - x0) <= d)
            throw NumericError("anchor point within jump_half_width of a singularity; "
                               "shift x0", s.xi);
    for (std::size_t i = 1; i < sings.size(); ++i)
        if (sings[i].xi - sings[i - 1].xi < 2.0 * d)
            throw NumericError("overlapping singularities in the sample range",
                               sings[i].xi);

    SweepPlan plan;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (xs[i] >= x0) plan.right.emplace_back(xs[i], i);
        else plan.left.emplace_back(xs[i], i);
    }
    std::reverse(plan.left.begin(), plan.left.end());
    for (const auto& s : sings) {
        if (s.xi > x0) plan.sings_right.push_back(s);
        else plan.sings_left.push_back(s);
    }
    std::reverse(plan.sings_left.begin(), plan.sings_left.end());
    return plan;
}

double scan_gap(const Problem& p, double x) {
    return frame_at(p, x, nullptr, FramePolicy{false, false}).gap;
}

void fill_residuals(const Problem& p, SolutionGrid& g) {
    const int n = p.order();
    const std::size_t N = g.xs.size();
    g.diagnostics.ode_residual.assign(N, std::numeric_limits<double>::quiet_NaN());
    const int hw_max = (n + 1) / 2;
    if (N < 2 * static_cast<std::size_t>(hw_max) + 1) return;

    // FD derivatives of every order at the interior points, plus their sup,
    // which normalizes the residual (a pointwise scale degenerates at zeros
    // of the solution).
    std::vector<std::vector<cplx>> fd(static_cast<std::size_t>(n) + 1,
                                      std::vector<cplx>(N, cplx(0, 0)));
    std::vector<double> sup(static_cast<std::size_t>(n) + 1, 0.0);
    for (std::size_t i = static_cast<std::size_t>(hw_max); i + hw_max < N; ++i) {
        fd[0][i] = g.values[i];
        sup[0] = std::max(sup[0], std::abs(fd[0][i]));
        for (int m = 1; m <= n; ++m) {
            int hw = (m + 1) / 2;
            std::vector<double> nodes(g.xs.begin() + static_cast<long>(i) - hw,
                                      g.xs.begin() + static_cast<long>(i) + hw + 1);
            auto w = fd_weights(g.xs[i], nodes, m);
            cplx v(0, 0);
            for (std::size_t t = 0; t < nodes.size(); ++t)
                v += w[t] * g.values[i - static_cast<std::size_t>(hw) + t];
            fd[std::size_t(m)][i] = v;
            sup[std::size_t(m)] = std::max(sup[std::size_t(m)], std::abs(v));
        }
    }
    for (std::size_t i = static_cast<std::size_t>(hw_max); i + hw_max < N; ++i) {
        std::vector<cplx> am;
        try {
            am = p.eval_coeffs(cplx(g.xs[i], 0));
        } catch (const EvalError&) {
            continue;
        }
        cplx num(0, 0);
        double den = 0.0;
        for (int m = 0; m <= n; ++m) {
            cplx a = (m == n) ? cplx(1, 0) : am[std::size_t(m)];
            num += a * fd[std::size_t(m)][i];
            den += std::abs(a) * sup[std::size_t(m)];
        }
        g.diagnostics.ode_residual[i] = std::abs(num) / std::max(den, 1e-300);
    }
}

}  // namespace

SolutionGrid solve_grid(const Problem& p, double x0, std::span<const cplx> derivs,
                        std::span<const double> xs, bool with_derivatives) {
    const int n = p.order();
    SweepPlan plan = plan_sweeps(p, x0, xs);

    RootFrame fr0 = track_frame(std::nullopt, p, x0);
    Envelope env0 = ic_to_envelope(p, fr0, derivs);
    CMatrix carry0(n, 1);
    for (int i = 0; i < n; ++i) carry0(i, 0) = env0.F[std::size_t(i)];
    NodeState anchor{fr0, carry0};

    SolutionGrid g;
    g.xs.assign(xs.begin(), xs.end());
    g.values.assign(xs.size(), cplx(0, 0));
    if (with_derivatives)
        g.derivs.assign(static_cast<std::size_t>(n - 1),
                        std::vector<cplx>(xs.size(), cplx(0, 0)));
    g.envelopes.assign(xs.size(), Envelope{});
    g.diagnostics.gap.assign(xs.size(), 0.0);

    auto emit_direct = [&](std::size_t idx, const NodeState& st) {
        g.values[idx] = recon_col(st.frame, st.carry, 0, 0);
        if (with_derivatives)
            for (int m = 1; m < n; ++m)
                g.derivs[std::size_t(m - 1)][idx] = recon_col(st.frame, st.carry, 0, m);
        Envelope e;
        e.x = st.frame.x;
        e.F.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) e.F[std::size_t(i)] = st.carry(i, 0);
        g.envelopes[idx] = std::move(e);
        g.diagnostics.gap[idx] = st.frame.gap;
    };
    auto emit_band = [&](std::size_t idx, double x, const NodeState& left,
                         const NodeState& right) {
        // The envelope picture breaks down inside the jump band; the solution
        // itself is smooth there, so interpolate the edge reconstructions.
        double w = (x - left.frame.x) / (right.frame.x - left.frame.x);
        auto lerp = [&](int m) {
            return (1.0 - w) * recon_col(left.frame, left.carry, 0, m) +
                   w * recon_col(right.frame, right.carry, 0, m);
        };
        g.values[idx] = lerp(0);
        if (with_derivatives)
            for (int m = 1; m < n; ++m) g.derivs[std::size_t(m - 1)][idx] = lerp(m);
        Envelope e;
        e.x = x;
        e.F.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            e.F[std::size_t(i)] = (1.0 - w) * left.carry(i, 0) + w * right.carry(i, 0);
        g.envelopes[idx] = std::move(e);
        g.diagnostics.gap[idx] = scan_gap(p, x);
    };

    sweep_targets(p, anchor, plan.right, 1.0, plan.sings_right, emit_direct, emit_band);
    sweep_targets(p, anchor, plan.left, -1.0, plan.sings_left, emit_direct, emit_band);

    fill_residuals(p, g);
    return g;
}

std::vector<SolutionGrid> fundamental_basis(const Problem& p, double x0,
                                            std::span<const double> xs) {
    const int n = p.order();
    SweepPlan plan = plan_sweeps(p, x0, xs);
    RootFrame fr0 = track_frame(std::nullopt, p, x0);
    NodeState anchor{fr0, CMatrix::identity(n)};

    std::vector<SolutionGrid> basis(static_cast<std::size_t>(n));
    for (auto& g : basis) {
        g.xs.assign(xs.begin(), xs.end());
        g.values.assign(xs.size(), cplx(0, 0));
        g.derivs.assign(static_cast<std::size_t>(n - 1),
                        std::vector<cplx>(xs.size(), cplx(0, 0)));
        g.diagnostics.gap.assign(xs.size(), 0.0);
    }

    auto record = [&](std::size_t idx, double x, auto&& recon, double gap) {
        CMatrix W(n, n);
        for (int col = 0; col < n; ++col) {
            for (int m = 0; m < n; ++m) {
                cplx v = recon(col, m);
                W(m, col) = v;
                if (m == 0) basis[std::size_t(col)].values[idx] = v;
                else basis[std::size_t(col)].derivs[std::size_t(m - 1)][idx] = v;
            }
            basis[std::size_t(col)].diagnostics.gap[idx] = gap;
        }
        if (!(std::abs(det(W)) > 0.0))
            throw NumericError("vanishing Wronskian in fundamental basis", x);
    };

    auto emit_direct = [&](std::size_t idx, const NodeState& st) {
        record(idx, st.frame.x,
               [&](int col, int m) { return recon_col(st.frame, st.carry, col, m); },
               st.frame.gap);
    };
    auto emit_band = [&](std::size_t idx, double x, const NodeState& left,
                         const NodeState& right) {
        double w = (x - left.frame.x) / (right.frame.x - left.frame.x);
        record(idx, x,
               [&](int col, int m) {
                   return (1.0 - w) * recon_col(left.frame, left.carry, col, m) +
                          w * recon_col(right.frame, right.carry, col, m);
               },
               scan_gap(p, x));
    };

    sweep_targets(p, anchor, plan.right, 1.0, plan.sings_right, emit_direct, emit_band);
    sweep_targets(p, anchor, plan.left, -1.0, plan.sings_left, emit_direct, emit_band);

    for (auto& g : basis) fill_residuals(p, g);
    return basis;
}

AbelReport wronskian_abel(const Problem& p, const std::vector<SolutionGrid>& basis,
                          double x_ref) {
    const int n = p.order();
    if (basis.size() != static_cast<std::size_t>(n))
        throw Error("wronskian_abel expects a basis of " + std::to_string(n) + " solutions");
    const auto& xs = basis[0].xs;
    for (const auto& g : basis) {
        if (g.xs != xs) throw Error("basis solutions sampled on different grids");
        if (g.derivs.size() != static_cast<std::size_t>(n - 1))
            throw Error("basis solutions are missing derivatives");
    }

    std::size_t ref = xs.size();
    for (std::size_t i = 0; i < xs.size(); ++i)
        if (std::abs(xs[i] - x_ref) <= 1e-9 * (1.0 + std::abs(x_ref))) {
            ref = i;
            break;
        }
    if (ref == xs.size()) throw Error("x_ref must be one of the sample points");

    AbelReport rep;
    rep.wronskian.resize(xs.size());
    for (std::size_t k = 0; k < xs.size(); ++k) {
        CMatrix W(n, n);
        for (int i = 0; i < n; ++i)
            for (int m = 0; m < n; ++m)
                W(m, i) = (m == 0) ? basis[std::size_t(i)].values[k]
                                   : basis[std::size_t(i)].derivs[std::size_t(m - 1)][k];
        rep.wronskian[k] = det(W);
    }

    // Cumulative integral of a_{n-1} from the reference point (composite
    // Simpson with 8 panels per grid interval).
    const auto& a_top = p.coeffs().back();
    auto seg_integral = [&](double a, double b) {
        const int panels = 8;
        cplx acc(0, 0);
        for (int k = 0; k <= 2 * panels; ++k) {
            double x = a + (b - a) * (static_cast<double>(k) / (2 * panels));
            double w = (k == 0 || k == 2 * panels) ? 1.0 : (k % 2 ? 4.0 : 2.0);
            acc += w * a_top(cplx(x, 0));
        }
        return acc * ((b - a) / (6.0 * panels));
    };
    std::vector<cplx> integral(xs.size(), cplx(0, 0));
    for (std::size_t k = ref + 1; k < xs.size(); ++k)
        integral[k] = integral[k - 1] + seg_integral(xs[k - 1], xs[k]);
    for (std::size_t k = ref; k-- > 0;)
        integral[k] = integral[k + 1] - seg_integral(xs[k], xs[k + 1]);

    rep.predicted.resize(xs.size());
    cplx A = rep.wronskian[ref];
    for (std::size_t k = 0; k < xs.size(); ++k)
        rep.predicted[k] = A * std::exp(-integral[k]);

    rep.max_rel_dev = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        double denom = std::max(std::abs(rep.predicted[k]), 1e-300);
        rep.max_rel_dev =
            std::max(rep.max_rel_dev, std::abs(rep.wronskian[k] - rep.predicted[k]) / denom);
    }
    return rep;
}

}  // namespace dtmm
