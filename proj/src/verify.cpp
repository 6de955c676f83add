#include "dtmm/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "dtmm/oracle.hpp"
#include "dtmm/solution.hpp"

namespace dtmm {

namespace {

std::vector<double> linspace(double a, double b, int count) {
    std::vector<double> xs(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
        xs[std::size_t(i)] = a + (b - a) * (static_cast<double>(i) / (count - 1));
    xs.back() = b;
    return xs;
}

struct Scope {
    Problem p;
    std::vector<SingularityReport> sings;
    double a, b;  // widest singularity-free probe interval
    bool has_probe_interval = false;
};

Scope make_scope(const Problem& p) {
    Scope sc{p, find_singularities(p), p.x_lo(), p.x_hi(), false};
    // The propagation checks hold away from singular segment edges; keep the
    // probe interval far enough out that the kernel is resolvable at the
    // problem's step size.
    const double margin =
        std::max({8.0 * p.resolved_jump_half_width(), 50.0 * p.resolved_step(),
                  0.06 * (p.x_hi() - p.x_lo())});
    double best_a = 0, best_b = 0, best_w = -1;
    std::vector<double> cuts{p.x_lo()};
    for (const auto& s : sc.sings) cuts.push_back(s.xi);
    cuts.push_back(p.x_hi());
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        double a = cuts[i] + (i == 0 ? 0.0 : margin);
        double b = cuts[i + 1] - (i + 2 == cuts.size() ? 0.0 : margin);
        if (b - a > best_w) {
            best_w = b - a;
            best_a = a;
            best_b = b;
        }
    }
    if (best_w > 16.0 * p.resolved_step()) {
        sc.a = best_a;
        sc.b = best_b;
        sc.has_probe_interval = true;
    }
    return sc;
}

double rel_dev(cplx got, cplx want) {
    return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

CheckResult skipped(std::string name, std::string note) {
    CheckResult r;
    r.name = std::move(name);
    r.ran = false;
    r.note = std::move(note);
    return r;
}

CheckResult measured(std::string name, double dev, double tol, std::string note = {}) {
    CheckResult r;
    r.name = std::move(name);
    r.deviation = dev;
    r.tolerance = tol;
    r.pass = dev < tol;
    r.note = std::move(note);
    return r;
}

// Lagrange-inverse delta identity on frames sampled across the probe interval.
CheckResult check_lagrange_inverse(const Scope& sc) {
    const char* name = "lagrange_inverse_identity";
    if (sc.p.order() < 2) return skipped(name, "n = 1: nothing to invert");
    if (!sc.has_probe_interval) return skipped(name, "no singularity-free interval");
    double dev = 0.0;
    for (double x : linspace(sc.a, sc.b, 16)) {
        RootFrame fr;
        try {
            fr = track_frame(std::nullopt, sc.p, x);
        } catch (const DegeneracyError&) {
            continue;
        }
        CMatrix G = vandermonde_inverse(fr);
        const int n = fr.order();
        for (int m = 1; m <= n; ++m)
            for (int r = 1; r <= n; ++r) {
                cplx s(0, 0);
                for (int i = 1; i <= n; ++i) {
                    cplx kp(1, 0);
                    for (int t = 0; t < m - 1; ++t) kp *= fr.roots[std::size_t(i - 1)];
                    s += G(i - 1, r - 1) * kp;
                }
                dev = std::max(dev, std::abs(s - ((m == r) ? cplx(1, 0) : cplx(0, 0))));
            }
    }
    return measured(name, dev, 1e-9);
}

CheckResult check_vieta(const Scope& sc) {
    const char* name = "vieta_root_identities";
    double dev = 0.0;
    for (double x : linspace(sc.p.x_lo(), sc.p.x_hi(), 13)) {
        RootFrame fr;
        try {
            fr = frame_at(sc.p, x, nullptr, FramePolicy{false, false});
        } catch (const Error&) {
            continue;
        }
        auto a = sc.p.eval_coeffs(cplx(x, 0));
        cplx sum(0, 0), prod(1, 0);
        for (const auto& k : fr.roots) {
            sum += k;
            prod *= k;
        }
        const int n = sc.p.order();
        double scale = 1.0 + std::abs(a.back()) + std::abs(a.front());
        dev = std::max(dev, std::abs(sum + a[std::size_t(n - 1)]) / scale);
        cplx sign = (n % 2 == 0) ? cplx(1, 0) : cplx(-1, 0);
        dev = std::max(dev, std::abs(prod - sign * a[0]) / scale);
    }
    return measured(name, dev, 1e-10);
}

// Derivative reconstruction: centered differences of the reconstructed f converge at
// second order to exp(Phi)^t K^m F. The probe solution carries generic
// complex initial data so no error-controlling derivative vanishes by
// accident (where one does, the local ratio climbs towards 16; a second
// probe point covers that).
CheckResult check_derivative_reconstruction(const Scope& sc) {
    const char* name = "derivative_reconstruction";
    const int n = sc.p.order();
    if (n < 2) return skipped(name, "n = 1: no derivative orders to test");
    if (!sc.has_probe_interval) return skipped(name, "no singularity-free interval");
    std::vector<cplx> ic(static_cast<std::size_t>(n));
    for (int m = 0; m < n; ++m)
        ic[std::size_t(m)] = std::pow(0.8, m) * cplx(std::cos(1.7 * m + 0.4),
                                                     std::sin(1.1 * m + 0.2));
    double h0 = std::min(0.02 * (sc.b - sc.a), 0.05);

    double best = 1e9;
    for (double frac : {0.45, 0.62}) {
        double xc = sc.a + frac * (sc.b - sc.a);
        double worst = 0.0;
        for (int m = 1; m < n; ++m) {
            double err[2];
            for (int lev = 0; lev < 2; ++lev) {
                double h = h0 / (1 << lev);
                std::vector<double> xs{xc - h, xc, xc + h};
                SolutionGrid g = solve_grid(sc.p, xc, ic, xs, true);
                cplx fd = (m == 1)
                              ? (g.values[2] - g.values[0]) / (2.0 * h)
                              : (g.deriv(m - 1)[2] - g.deriv(m - 1)[0]) / (2.0 * h);
                err[lev] = std::abs(fd - g.deriv(m)[1]);
            }
            if (err[1] < 1e-13) continue;  // below the noise floor
            worst = std::max(worst, std::abs(err[0] / err[1] - 4.0));
        }
        best = std::min(best, worst);
    }
    return measured(name, best, 1.0, "|err(h)/err(h/2) - 4| over derivative orders");
}

CheckResult check_transfer_properties(const Scope& sc) {
    const char* name = "transfer_properties";
    if (!sc.has_probe_interval) return skipped(name, "no singularity-free interval");
    double a = sc.a, b = sc.b, mid = 0.5 * (a + b);
    const int n = sc.p.order();
    double dev = 0.0;
    TransferMatrix self = propagate_ode(sc.p, a, a);
    dev = std::max(dev, self.Q.max_abs_diff(CMatrix::identity(n)));
    TransferMatrix ab = propagate_ode(sc.p, a, b);
    TransferMatrix am = propagate_ode(sc.p, a, mid);
    TransferMatrix mb = propagate_ode(sc.p, mid, b);
    dev = std::max(dev, (mb.Q * am.Q).max_abs_diff(ab.Q));
    TransferMatrix ba = propagate_ode(sc.p, b, a);
    dev = std::max(dev, (ba.Q * ab.Q).max_abs_diff(CMatrix::identity(n)));
    return measured(name, dev, 1e-9, "self-projection, decomposition, inversion");
}

CheckResult check_det_formula(const Scope& sc) {
    const char* name = "det_formula";
    if (!sc.has_probe_interval) return skipped(name, "no singularity-free interval");
    RootFrame fr1 = track_frame(std::nullopt, sc.p, sc.a);
    RootFrame fr2;
    TransferMatrix Q = propagate_ode_from(sc.p, fr1, sc.b, &fr2);
    cplx want = transfer_det_formula(sc.p, fr1, fr2);
    return measured(name, rel_dev(det(Q.Q), want), 1e-6);
}

CheckResult check_det_ode_vs_exp(const Scope& sc) {
    const char* name = "det_ode_vs_exp";
    if (!sc.has_probe_interval) return skipped(name, "no singularity-free interval");
    cplx d_ode = det(propagate_ode(sc.p, sc.a, sc.b).Q);
    cplx d_exp = det(propagate_exp(sc.p, sc.a, sc.b).first.Q);
    return measured(name, rel_dev(d_ode, d_exp), 1e-6);
}

CheckResult check_m_equals_j_plus_t(const Scope& sc) {
    const char* name = "m_equals_j_plus_t";
    if (!sc.has_probe_interval) return skipped(name, "no singularity-free interval");
    auto [Q, te] = propagate_exp(sc.p, sc.a, sc.b);
    double dev = te.M.max_abs_diff(te.J + te.T);
    return measured(name, dev, 1e-8);
}

CheckResult check_jump_identities(const Scope& sc) {
    const char* name = "jump_identities";
    if (sc.p.order() < 2) return skipped(name, "n = 1: jumps are scalar");
    if (!sc.has_probe_interval) return skipped(name, "no singularity-free interval");
    auto pts = linspace(sc.a, sc.b, 5);
    std::vector<Layer> stack;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        RootFrame fr;
        try {
            fr = track_frame(std::nullopt, sc.p, 0.5 * (pts[i] + pts[i + 1]));
        } catch (const DegeneracyError&) {
            return skipped(name, "degenerate probe frame");
        }
        stack.push_back(Layer{pts[i], pts[i + 1], fr});
    }
    TransferMatrix Q = layered_transfer(stack);
    cplx dprod(1, 0);
    for (std::size_t i = 1; i < stack.size(); ++i)
        dprod *= jump_det(stack[i - 1].frame, stack[i].frame, stack[i].x_lo);
    double dev = rel_dev(det(Q.Q), dprod);

    // Reverse traversal realized by swapping frames pairwise.
    CMatrix Qr = CMatrix::identity(sc.p.order());
    for (std::size_t i = stack.size(); i-- > 1;)
        Qr = jump_matrix(stack[i].frame, stack[i - 1].frame, stack[i].x_lo).Q * Qr;
    dev = std::max(dev, (Qr * Q.Q).max_abs_diff(CMatrix::identity(sc.p.order())));
    return measured(name, dev, 1e-9, "determinant product and inversion");
}

CheckResult check_abel(const Scope& sc) {
    const char* name = "abel_wronskian";
    if (!sc.has_probe_interval) return skipped(name, "no singularity-free interval");
    auto xs = linspace(sc.a, sc.b, 41);
    auto basis = fundamental_basis(sc.p, xs.front(), xs);
    AbelReport rep = wronskian_abel(sc.p, basis, xs.front());
    // Constant-Wronskian problems get the tighter bar.
    bool top_zero = true;
    for (double x : linspace(sc.a, sc.b, 9))
        if (std::abs(sc.p.coeffs().back()(cplx(x, 0))) > 1e-12) top_zero = false;
    double tol = top_zero ? 1e-7 : 1e-6;
    return measured(name, rep.max_rel_dev, tol,
                    top_zero ? "a_{n-1} == 0: constant Wronskian" : "");
}

CheckResult check_exp2x2(std::mt19937& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double dev = 0.0;
    for (int t = 0; t < 200; ++t) {
        CMatrix M(2, 2);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) M(i, j) = cplx(u(rng), u(rng));
        CMatrix a = mat_exp_2x2(M), b = mat_exp(M);
        dev = std::max(dev, a.max_abs_diff(b) / std::max(b.max_abs(), 1e-300));
    }
    return measured("exp_2x2_closed_form", dev, 1e-12);
}

CheckResult check_path_exp_det(std::mt19937& rng) {
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    double dev = 0.0;
    for (int t = 0; t < 5; ++t) {
        // Random diagonally dominant quadratic path H(x) on [0, 1].
        CMatrix H0(3, 3), H1(3, 3), H2(3, 3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                H0(i, j) = cplx(u(rng), u(rng)) + (i == j ? cplx(3, 0) : cplx(0, 0));
                H1(i, j) = cplx(u(rng), u(rng));
                H2(i, j) = cplx(u(rng), u(rng));
            }
        auto Hat = [&](double x) { return H0 + H1 * x + H2 * (x * x); };
        auto Hprime = [&](double x) { return H1 + H2 * (2.0 * x); };
        const int panels = 128;
        CMatrix acc(3, 3);
        for (int k = 0; k <= 2 * panels; ++k) {
            double x = static_cast<double>(k) / (2 * panels);
            double w = (k == 0 || k == 2 * panels) ? 1.0 : (k % 2 ? 4.0 : 2.0);
            acc += lu_solve(Hat(x), Hprime(x)) * (w / (6.0 * panels));
        }
        cplx lhs = det(mat_exp(acc));
        cplx rhs = det(lu_solve(Hat(0.0), Hat(1.0)));
        dev = std::max(dev, rel_dev(lhs, rhs));
    }
    return measured("path_exp_det_identity", dev, 1e-6);
}

CheckResult check_oracle(const ProblemFile& pf, const Scope& sc) {
    const char* name = "oracle_match";
    if (!pf.ic) return skipped(name, "no initial conditions in the problem file");
    int count = pf.grid.value_or(101);
    auto xs = linspace(sc.p.x_lo(), sc.p.x_hi(), count);
    SolutionGrid got = solve_grid(sc.p, sc.p.x_lo(), *pf.ic, xs, false);
    SolutionGrid want = oracle_solve(sc.p, sc.p.x_lo(), *pf.ic, xs);
    double scale = 0.0;
    for (const auto& v : want.values) scale = std::max(scale, std::abs(v));
    double dev = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i)
        dev = std::max(dev, std::abs(got.values[i] - want.values[i]));
    dev /= std::max(scale, 1e-300);
    double tol = sc.sings.empty() ? 1e-5 : 5e-2;
    return measured(name, dev, tol,
                    sc.sings.empty() ? "" : "tolerance widened: singular interval");
}

CheckResult check_singular_jump_limits(const Scope& sc) {
    const char* name = "singularity_jump_limit";
    if (sc.sings.empty()) return skipped(name, "no singularities in the domain");
    double dev = 0.0;
    bool any = false;
    for (const auto& s : sc.sings) {
        if (s.kind == SingKind::unclassified) continue;
        any = true;
        CMatrix canon(2, 2);
        const cplx pj = cplx(0.5, 0.5), mj = cplx(0.5, -0.5);
        switch (s.kind) {
            case SingKind::A:
                canon(0, 0) = pj; canon(0, 1) = mj; canon(1, 0) = mj; canon(1, 1) = pj;
                break;
            case SingKind::B:
                canon(0, 0) = mj; canon(0, 1) = pj; canon(1, 0) = pj; canon(1, 1) = mj;
                break;
            default: canon = CMatrix::identity(2); break;
        }
        TransferMatrix J = singular_jump(sc.p, s);
        dev = std::max(dev, J.Q.max_abs_diff(canon));
    }
    if (!any) return skipped(name, "singularities present but unclassified");
    return measured(name, dev, 5e-2, "distance to the canonical limit matrix");
}

}  // namespace

std::vector<CheckResult> run_checks(const ProblemFile& pf) {
    Scope sc = make_scope(pf.problem);
    std::mt19937 rng(12345);

    std::vector<CheckResult> out;
    out.push_back(check_vieta(sc));
    out.push_back(check_lagrange_inverse(sc));
    out.push_back(check_derivative_reconstruction(sc));
    out.push_back(check_transfer_properties(sc));
    out.push_back(check_det_formula(sc));
    out.push_back(check_det_ode_vs_exp(sc));
    out.push_back(check_m_equals_j_plus_t(sc));
    out.push_back(check_jump_identities(sc));
    out.push_back(check_abel(sc));
    out.push_back(check_exp2x2(rng));
    out.push_back(check_path_exp_det(rng));
    out.push_back(check_oracle(pf, sc));
    out.push_back(check_singular_jump_limits(sc));
    return out;
}

}  // namespace dtmm
