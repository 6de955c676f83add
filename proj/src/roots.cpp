#include "dtmm/roots.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>

namespace dtmm {

namespace {

// p(z) and p'(z) for the monic polynomial with low-order coefficients c.
struct PolyVal {
    cplx p, dp;
};

PolyVal eval_monic(std::span<const cplx> c, cplx z) {
    const int n = static_cast<int>(c.size());
    cplx p(1, 0), dp(0, 0);
    for (int m = n - 1; m >= 0; --m) {
        dp = dp * z + p;
        p = p * z + c[static_cast<std::size_t>(m)];
    }
    return {p, dp};
}

double residual_scale(std::span<const cplx> c, cplx z) {
    double s = 1.0, zp = 1.0, az = std::abs(z);
    for (const auto& cm : c) {
        s = std::max(s, std::abs(cm) * zp);
        zp *= az;
    }
    return std::max(s, zp);  // zp is |z|^n, the leading term
}

}  // namespace

namespace {

std::vector<cplx> circle_start(std::span<const cplx> coeffs) {
    const int n = static_cast<int>(coeffs.size());
    double r = 0.0;
    for (int m = 0; m < n; ++m)
        r = std::max(r, std::pow(std::abs(coeffs[std::size_t(m)]),
                                 1.0 / static_cast<double>(n - m)));
    r = 1.0 + r;
    std::vector<cplx> z(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double th = 2.0 * std::numbers::pi * (i + 0.5) / n + 0.4;
        z[std::size_t(i)] = r * cplx(std::cos(th), std::sin(th));
    }
    return z;
}

std::vector<cplx> aberth(std::span<const cplx> coeffs, std::vector<cplx> z) {
    const int n = static_cast<int>(z.size());
    const int max_iter = 200;
    for (int iter = 0; iter < max_iter; ++iter) {
        double worst_corr = 0.0;
        for (int i = 0; i < n; ++i) {
            PolyVal pv = eval_monic(coeffs, z[std::size_t(i)]);
            if (pv.p == cplx(0, 0)) continue;
            if (pv.dp == cplx(0, 0)) {
                z[std::size_t(i)] += cplx(1e-8, 1e-8) * (1.0 + std::abs(z[std::size_t(i)]));
                worst_corr = std::numeric_limits<double>::infinity();
                continue;
            }
            cplx w = pv.p / pv.dp;
            cplx s(0, 0);
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                cplx d = z[std::size_t(i)] - z[std::size_t(j)];
                if (d == cplx(0, 0)) d = cplx(1e-14, 0);
                s += cplx(1, 0) / d;
            }
            cplx denom = cplx(1, 0) - w * s;
            cplx corr = (denom == cplx(0, 0)) ? w : w / denom;
            z[std::size_t(i)] -= corr;
            worst_corr = std::max(worst_corr,
                                  std::abs(corr) / (1.0 + std::abs(z[std::size_t(i)])));
        }
        if (worst_corr < 1e-14) break;
    }
    // Newton polish; quadratic cleanup at simple roots, harmless at clusters.
    for (int i = 0; i < n; ++i)
        for (int step = 0; step < 2; ++step) {
            PolyVal pv = eval_monic(coeffs, z[std::size_t(i)]);
            if (pv.dp == cplx(0, 0)) break;
            cplx corr = pv.p / pv.dp;
            if (std::abs(corr) > 0.5 * (1.0 + std::abs(z[std::size_t(i)]))) break;
            z[std::size_t(i)] -= corr;
        }
    return z;
}

bool residuals_ok(std::span<const cplx> coeffs, const std::vector<cplx>& z) {
    for (const cplx& zi : z) {
        PolyVal pv = eval_monic(coeffs, zi);
        if (std::abs(pv.p) > 1e-10 * (1.0 + residual_scale(coeffs, zi))) return false;
    }
    return true;
}

}  // namespace

std::vector<cplx> roots_at(std::span<const cplx> coeffs, std::span<const cplx> warm_start) {
    const int n = static_cast<int>(coeffs.size());
    for (const auto& c : coeffs)
        if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
            throw NumericError("root finding with non-finite coefficients");
    if (n == 0) return {};
    if (n == 1) return {-coeffs[0]};

    bool warm = warm_start.size() == static_cast<std::size_t>(n);
    if (warm) {
        std::vector<cplx> z(warm_start.begin(), warm_start.end());
        // Coincident starting points break the Aberth correction.
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < i; ++j)
                if (z[std::size_t(i)] == z[std::size_t(j)])
                    z[std::size_t(i)] +=
                        cplx(0.0, 1e-9 * (1.0 + std::abs(z[std::size_t(i)])));
        z = aberth(coeffs, std::move(z));
        if (residuals_ok(coeffs, z)) return z;
        // A stale warm start (rootfield changed abruptly, or the previous
        // frame was degenerate) can stall the iteration; retry cold.
    }
    std::vector<cplx> z = aberth(coeffs, circle_start(coeffs));
    if (!residuals_ok(coeffs, z))
        throw NumericError("root finder did not converge to the residual bound");
    return z;
}

double min_pairwise_gap(std::span<const cplx> roots) {
    const int n = static_cast<int>(roots.size());
    if (n < 2) return std::numeric_limits<double>::infinity();
    double g = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            g = std::min(g, std::abs(roots[std::size_t(i)] - roots[std::size_t(j)]));
    return g;
}

double degeneracy_threshold(const Problem& p, const RootFrame& fr) {
    double kmax = 0.0;
    for (const auto& k : fr.roots) kmax = std::max(kmax, std::abs(k));
    return p.options().degeneracy_eps * (1.0 + kmax);
}

namespace {

// Exact minimum-total-distance assignment of new roots to prev slots
// (bitmask DP; n <= 16 by construction, n <= 8 in practice).
std::vector<int> assign_slots(const std::vector<cplx>& prev, const std::vector<cplx>& roots) {
    const int n = static_cast<int>(prev.size());
    const std::size_t full = (std::size_t(1) << n);
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> cost(full, inf);
    std::vector<int> choice(full * static_cast<std::size_t>(n), -1);
    cost[0] = 0.0;
    for (std::size_t mask = 0; mask < full; ++mask) {
        if (cost[mask] == inf) continue;
        int i = std::popcount(mask);  // next slot to fill
        if (i >= n) continue;
        for (int j = 0; j < n; ++j) {
            if (mask & (std::size_t(1) << j)) continue;
            std::size_t next = mask | (std::size_t(1) << j);
            double c = cost[mask] + std::abs(prev[std::size_t(i)] - roots[std::size_t(j)]);
            if (c < cost[next]) {
                cost[next] = c;
                choice[next * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)] = j;
            }
        }
    }
    std::vector<int> pick(static_cast<std::size_t>(n));
    std::size_t mask = full - 1;
    for (int i = n - 1; i >= 0; --i) {
        int j = choice[mask * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)];
        pick[std::size_t(i)] = j;
        mask &= ~(std::size_t(1) << j);
    }
    return pick;
}

}  // namespace

RootFrame frame_at(const Problem& p, double x, const RootFrame* prev, FramePolicy policy) {
    std::vector<cplx> coeffs = p.eval_coeffs(cplx(x, 0.0));
    std::vector<cplx> raw;
    try {
        raw = roots_at(coeffs, prev ? std::span<const cplx>(prev->roots)
                                    : std::span<const cplx>{});
    } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " at x=" + std::to_string(x), x);
    }

    RootFrame fr;
    fr.x = x;
    const int n = p.order();
    if (prev) {
        auto pick = assign_slots(prev->roots, raw);
        fr.roots.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            fr.roots[std::size_t(i)] = raw[static_cast<std::size_t>(pick[std::size_t(i)])];
    } else {
        // Lexicographic by (Re, Im), with the real parts quantized so that
        // noise-level differences (symmetric pairs whose real parts are both
        // numerically zero) cannot decide the order.
        double scale = 1.0;
        for (const auto& k : raw) scale = std::max(scale, std::abs(k));
        const double quantum = 1e-12 * scale;
        auto key = [&](cplx k) { return std::nearbyint(k.real() / quantum); };
        std::sort(raw.begin(), raw.end(), [&](cplx a, cplx b) {
            if (key(a) != key(b)) return key(a) < key(b);
            return a.imag() < b.imag();
        });
        fr.roots = std::move(raw);
    }
    fr.gap = min_pairwise_gap(fr.roots);

    double thresh = degeneracy_threshold(p, fr);
    if (policy.require_nondegenerate && fr.gap < thresh) {
        auto [i, j] = [&] {
            for (int a = 0; a < n; ++a)
                for (int b = a + 1; b < n; ++b)
                    if (std::abs(fr.roots[std::size_t(a)] - fr.roots[std::size_t(b)]) ==
                        fr.gap)
                        return std::pair<int, int>(a, b);
            return std::pair<int, int>(0, 1);
        }();
        throw DegeneracyError("degenerate characteristic roots (slots " +
                                  std::to_string(i) + "," + std::to_string(j) + ")",
                              x, i, j, fr.gap);
    }

    if (policy.compute_droots) {
        std::vector<cplx> dcoeffs = p.eval_coeff_derivs(cplx(x, 0.0));
        fr.droots.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            cplx k = fr.roots[std::size_t(i)];
            cplx num(0, 0), kp(1, 0);
            for (int m = 0; m < n; ++m) {
                num += dcoeffs[std::size_t(m)] * kp;
                kp *= k;
            }
            cplx den = eval_monic(coeffs, k).dp;
            if (std::abs(den) < 1e-14) {
                if (policy.require_nondegenerate)
                    throw DegeneracyError("implicit-derivative denominator underflow", x, i,
                                          i, fr.gap);
                fr.droots[std::size_t(i)] = cplx(0, 0);
                continue;
            }
            fr.droots[std::size_t(i)] = -num / den;
        }
    }
    return fr;
}

RootFrame track_frame(const std::optional<RootFrame>& prev, const Problem& p, double x) {
    return frame_at(p, x, prev ? &*prev : nullptr, FramePolicy{});
}

RootFrame track_to(const Problem& p, RootFrame fr, double x_target, double step) {
    if (!(step > 0.0)) throw NumericError("track_to needs a positive step");
    while (fr.x != x_target) {
        double dir = (x_target > fr.x) ? 1.0 : -1.0;
        double next = fr.x + dir * step;
        if ((dir > 0 && next >= x_target) || (dir < 0 && next <= x_target)) next = x_target;
        fr = frame_at(p, next, &fr, FramePolicy{});
    }
    return fr;
}

std::vector<cplx> phase_vector(const RootFrame& fr) {
    std::vector<cplx> phi(fr.roots.size());
    for (std::size_t i = 0; i < fr.roots.size(); ++i) phi[i] = fr.x * fr.roots[i];
    return phi;
}

}  // namespace dtmm
