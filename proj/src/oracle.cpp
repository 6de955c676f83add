#include "dtmm/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dtmm {

std::vector<cplx> companion_rhs(const Problem& p, const CompanionState& s) {
    const int n = p.order();
    if (s.y.size() != static_cast<std::size_t>(n))
        throw Error("companion state has wrong dimension");
    std::vector<cplx> dy(static_cast<std::size_t>(n));
    for (int i = 0; i + 1 < n; ++i) dy[std::size_t(i)] = s.y[std::size_t(i) + 1];
    auto a = p.eval_coeffs(cplx(s.x, 0));
    cplx top(0, 0);
    for (int m = 0; m < n; ++m) top -= a[std::size_t(m)] * s.y[std::size_t(m)];
    dy[std::size_t(n - 1)] = top;
    return dy;
}

namespace {

using Vec = std::vector<cplx>;

Vec rhs(const Problem& p, double x, const Vec& y) {
    return companion_rhs(p, CompanionState{x, y});
}

Vec axpy(const Vec& y, const Vec& k, double h) {
    Vec r = y;
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += h * k[i];
    return r;
}

// One RK4 step of the companion system.
Vec rk4_step(const Problem& p, double x, const Vec& y, double h) {
    Vec k1 = rhs(p, x, y);
    Vec k2 = rhs(p, x + 0.5 * h, axpy(y, k1, 0.5 * h));
    Vec k3 = rhs(p, x + 0.5 * h, axpy(y, k2, 0.5 * h));
    Vec k4 = rhs(p, x + h, axpy(y, k3, h));
    Vec r = y;
    for (std::size_t i = 0; i < r.size(); ++i)
        r[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return r;
}

// Integrate from (x_from, y) to x_to with steps of size at most h_max.
Vec integrate(const Problem& p, double x_from, Vec y, double x_to, double h_max) {
    if (x_from == x_to) return y;
    auto nsteps = static_cast<long>(std::ceil(std::abs(x_to - x_from) / h_max - 1e-9));
    nsteps = std::max<long>(nsteps, 1);
    for (long s = 0; s < nsteps; ++s) {
        double x = x_from + (x_to - x_from) * (static_cast<double>(s) / nsteps);
        double x_next = (s + 1 == nsteps)
                            ? x_to
                            : x_from + (x_to - x_from) * (static_cast<double>(s + 1) / nsteps);
        y = rk4_step(p, x, y, x_next - x);
    }
    return y;
}

// All grid states at one refinement level, sweeping right then left from x0.
std::vector<Vec> grid_states(const Problem& p, double x0, const Vec& y0,
                             std::span<const double> xs, double h) {
    std::vector<Vec> out(xs.size());
    Vec y = y0;
    double cur = x0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (xs[i] < x0) continue;
        y = integrate(p, cur, std::move(y), xs[i], h);
        cur = xs[i];
        out[i] = y;
    }
    y = y0;
    cur = x0;
    for (std::size_t i = xs.size(); i-- > 0;) {
        if (xs[i] >= x0) continue;
        y = integrate(p, cur, std::move(y), xs[i], h);
        cur = xs[i];
        out[i] = y;
    }
    return out;
}

}  // namespace

SolutionGrid oracle_solve(const Problem& p, double x0, std::span<const cplx> derivs,
                          std::span<const double> xs) {
    const int n = p.order();
    if (derivs.size() != static_cast<std::size_t>(n))
        throw Error("oracle_solve expects " + std::to_string(n) + " initial derivatives");
    if (xs.empty()) throw Error("empty sample grid");
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i > 0 && !(xs[i] > xs[i - 1]))
            throw Error("sample points must be strictly increasing");
        if (!p.in_domain(xs[i]))
            throw Error("sample point outside the problem domain");
    }
    if (!p.in_domain(x0)) throw Error("anchor point outside the problem domain");

    Vec y0(derivs.begin(), derivs.end());
    const double span =
        std::max(std::abs(xs.back() - x0), std::abs(xs.front() - x0)) + (xs.back() - xs.front());
    const double tol = 1e-10;

    std::vector<Vec> prev;
    double h = std::max(span, 1e-12) / 512.0;
    for (int level = 0; level < 12; ++level, h *= 0.5) {
        std::vector<Vec> curr = grid_states(p, x0, y0, xs, h);
        if (!prev.empty()) {
            double scale = 0.0;
            for (const auto& v : curr)
                for (const auto& c : v) scale = std::max(scale, std::abs(c));
            double dev = 0.0;
            for (std::size_t i = 0; i < curr.size(); ++i)
                for (std::size_t c = 0; c < curr[i].size(); ++c)
                    dev = std::max(dev, std::abs(curr[i][c] - prev[i][c]));
            if (dev <= tol * (1.0 + scale)) {
                prev = std::move(curr);
                SolutionGrid g;
                g.xs.assign(xs.begin(), xs.end());
                g.values.resize(xs.size());
                g.derivs.assign(static_cast<std::size_t>(n - 1),
                                std::vector<cplx>(xs.size()));
                for (std::size_t i = 0; i < xs.size(); ++i) {
                    g.values[i] = prev[i][0];
                    for (int m = 1; m < n; ++m)
                        g.derivs[std::size_t(m - 1)][i] = prev[i][std::size_t(m)];
                }
                g.diagnostics.gap.assign(xs.size(),
                                         std::numeric_limits<double>::quiet_NaN());
                return g;
            }
        }
        prev = std::move(curr);
    }
    throw NumericError("oracle did not self-converge to 1e-10 at the step floor");
}

}  // namespace dtmm
