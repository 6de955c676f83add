#include "dtmm/runner.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dtmm/oracle.hpp"
#include "dtmm/solution.hpp"
#include "dtmm/verify.hpp"

namespace dtmm {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot read problem file '" + path + "'", 1, 1);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string fnv1a64(const std::string& data) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw NumericError("cannot write output file '" + path + "'");
    out << content;
}

struct LoadedProblem {
    ProblemFile pf;
    std::string digest;
};

LoadedProblem load(const std::string& path, const CliFlags& flags) {
    std::string text = read_file(path);
    ProblemFile pf = parse_problem_file(text);
    SolverOptions opt = pf.problem.options();
    if (flags.method) opt.method = *flags.method;
    if (flags.step) {
        if (!(*flags.step > 0.0)) throw ParseError("--step must be > 0", 1, 1);
        opt.step = *flags.step;
    }
    return LoadedProblem{ProblemFile{pf.problem.with_options(opt), pf.ic, pf.grid},
                         fnv1a64(text)};
}

std::vector<double> linspace(double a, double b, int count) {
    std::vector<double> xs(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
        xs[std::size_t(i)] = a + (b - a) * (static_cast<double>(i) / (count - 1));
    xs.back() = b;
    return xs;
}

std::string singularity_summary(const std::vector<SingularityReport>& sings) {
    if (sings.empty()) return "none";
    std::string s;
    for (std::size_t i = 0; i < sings.size(); ++i) {
        if (i) s += ";";
        s += "xi=" + fmt(sings[i].xi) + ":kind=" + to_string(sings[i].kind) +
             ":gap=" + fmt(sings[i].gap_at_xi);
    }
    return s;
}

}  // namespace

std::string RunReport::to_text() const {
    std::string s;
    s += "command=" + command + "\n";
    s += "input=" + input_path + "\n";
    s += "input_digest=" + input_digest + "\n";
    for (const auto& o : outputs) s += "output=" + o + "\n";
    for (const auto& [k, v] : diagnostics) s += "diag." + k + "=" + v + "\n";
    return s;
}

RunReport cmd_solve(const std::string& problem_path, const std::string& output_path,
                    const CliFlags& flags) {
    LoadedProblem lp = load(problem_path, flags);
    if (!lp.pf.ic) throw ParseError("solve requires the 'ic' key", 1, 1);
    if (!lp.pf.grid) throw ParseError("solve requires the 'grid' key", 1, 1);
    const Problem& p = lp.pf.problem;
    const int n = p.order();

    auto xs = linspace(p.x_lo(), p.x_hi(), *lp.pf.grid);
    // Derivatives are computed regardless of the output flag: the singular
    // jump skips the envelope evolution over 2*delta, and 2*delta*|f'| is the
    // size of that neglected change, reported per singularity below.
    SolutionGrid g = solve_grid(p, p.x_lo(), *lp.pf.ic, xs, true);
    auto sings = find_singularities(p);

    std::string csv = "x,re_f,im_f";
    if (flags.derivatives)
        for (int m = 1; m < n; ++m)
            csv += ",re_f" + std::to_string(m) + ",im_f" + std::to_string(m);
    csv += ",gap\n";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        csv += fmt(xs[i]) + "," + fmt(g.values[i].real()) + "," + fmt(g.values[i].imag());
        if (flags.derivatives)
            for (int m = 1; m < n; ++m) {
                cplx d = g.deriv(m)[i];
                csv += "," + fmt(d.real()) + "," + fmt(d.imag());
            }
        csv += "," + fmt(g.diagnostics.gap[i]) + "\n";
    }

    RunReport rep;
    rep.command = "solve";
    rep.input_path = problem_path;
    rep.input_digest = lp.digest;
    rep.diagnostics.emplace_back("method",
                                 p.options().method == Method::exp ? "exp" : "ode");
    rep.diagnostics.emplace_back("grid", std::to_string(*lp.pf.grid));
    rep.diagnostics.emplace_back("singularities", singularity_summary(sings));
    if (n >= 2)
        for (std::size_t si = 0; si < sings.size(); ++si) {
            std::size_t nearest = 0;
            for (std::size_t i = 1; i < xs.size(); ++i)
                if (std::abs(xs[i] - sings[si].xi) < std::abs(xs[nearest] - sings[si].xi))
                    nearest = i;
            double skip = 2.0 * p.resolved_jump_half_width() *
                          std::abs(g.deriv(1)[nearest]);
            rep.diagnostics.emplace_back("jump_skip_estimate." + std::to_string(si),
                                         fmt(skip));
        }
    // The FD residual is meaningless where the stencil straddles a jump band;
    // the summary skips those samples (their gap column still flags them).
    double worst_res = 0.0;
    double grid_h = xs.size() > 1 ? (xs[1] - xs[0]) : 0.0;
    double exclusion =
        p.resolved_jump_half_width() + 0.5 * (n + 3) * grid_h;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double r = g.diagnostics.ode_residual[i];
        if (!std::isfinite(r)) continue;
        bool near_sing = false;
        for (const auto& s : sings)
            if (std::abs(xs[i] - s.xi) < exclusion) near_sing = true;
        if (!near_sing) worst_res = std::max(worst_res, r);
    }
    rep.diagnostics.emplace_back("max_fd_residual", fmt(worst_res));

    if (flags.oracle) {
        SolutionGrid ref = oracle_solve(p, p.x_lo(), *lp.pf.ic, xs);
        double scale = 0.0, dev = 0.0;
        for (const auto& v : ref.values) scale = std::max(scale, std::abs(v));
        for (std::size_t i = 0; i < xs.size(); ++i)
            dev = std::max(dev, std::abs(g.values[i] - ref.values[i]));
        rep.diagnostics.emplace_back("max_oracle_rel_err",
                                     fmt(dev / std::max(scale, 1e-300)));
    }

    write_file(output_path, csv);
    rep.outputs.push_back(output_path);
    return rep;
}

RunReport cmd_transfer(const std::string& problem_path, double x1, double x2,
                       const CliFlags& flags, std::string* table_out) {
    LoadedProblem lp = load(problem_path, flags);
    const Problem& p = lp.pf.problem;
    const int n = p.order();

    auto sings = find_singularities(p, std::min(x1, x2), std::max(x1, x2));
    RunReport rep;
    rep.command = "transfer";
    rep.input_path = problem_path;
    rep.input_digest = lp.digest;

    std::string table = "i,j,re_q,im_q\n";
    cplx dnum;
    if (sings.empty()) {
        RootFrame fr1 = track_frame(std::nullopt, p, x1);
        RootFrame fr2;
        TransferMatrix Q = propagate_segment(p, fr1, x2, &fr2);
        dnum = det(Q.Q);
        cplx dform = transfer_det_formula(p, fr1, fr2);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                table += std::to_string(i) + "," + std::to_string(j) + "," +
                         fmt(Q.Q(i, j).real()) + "," + fmt(Q.Q(i, j).imag()) + "\n";
        double dev = std::abs(dnum - dform) / std::max(std::abs(dform), 1e-300);
        rep.diagnostics.emplace_back("det_numeric", fmt(dnum.real()) + (dnum.imag() < 0 ? "" : "+") + fmt(dnum.imag()) + "j");
        rep.diagnostics.emplace_back("det_formula", fmt(dform.real()) + (dform.imag() < 0 ? "" : "+") + fmt(dform.imag()) + "j");
        rep.diagnostics.emplace_back("det_rel_dev", fmt(dev));
    } else {
        TransferMatrix Q = propagate_robust(p, x1, x2);
        dnum = det(Q.Q);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                table += std::to_string(i) + "," + std::to_string(j) + "," +
                         fmt(Q.Q(i, j).real()) + "," + fmt(Q.Q(i, j).imag()) + "\n";
        rep.diagnostics.emplace_back("det_numeric", fmt(dnum.real()) + (dnum.imag() < 0 ? "" : "+") + fmt(dnum.imag()) + "j");
        rep.diagnostics.emplace_back("det_formula",
                                     "unavailable (singular interval)");
        rep.diagnostics.emplace_back("singularities", singularity_summary(sings));
    }
    if (table_out) *table_out = table;
    return rep;
}

RunReport cmd_basis(const std::string& problem_path, const std::string& output_path,
                    const CliFlags& flags) {
    LoadedProblem lp = load(problem_path, flags);
    if (!lp.pf.grid) throw ParseError("basis requires the 'grid' key", 1, 1);
    const Problem& p = lp.pf.problem;
    const int n = p.order();

    auto xs = linspace(p.x_lo(), p.x_hi(), *lp.pf.grid);
    auto basis = fundamental_basis(p, xs.front(), xs);
    AbelReport abel = wronskian_abel(p, basis, xs.front());

    std::string csv = "x";
    for (int i = 1; i <= n; ++i)
        csv += ",re_g" + std::to_string(i) + ",im_g" + std::to_string(i);
    csv += ",re_w,im_w\n";
    for (std::size_t k = 0; k < xs.size(); ++k) {
        csv += fmt(xs[k]);
        for (int i = 0; i < n; ++i) {
            cplx v = basis[std::size_t(i)].values[k];
            csv += "," + fmt(v.real()) + "," + fmt(v.imag());
        }
        csv += "," + fmt(abel.wronskian[k].real()) + "," + fmt(abel.wronskian[k].imag()) +
               "\n";
    }
    write_file(output_path, csv);

    RunReport rep;
    rep.command = "basis";
    rep.input_path = problem_path;
    rep.input_digest = lp.digest;
    rep.outputs.push_back(output_path);
    rep.diagnostics.emplace_back("abel_max_rel_dev", fmt(abel.max_rel_dev));
    return rep;
}

RunReport cmd_singularities(const std::string& problem_path, const CliFlags& flags,
                            std::string* table_out) {
    LoadedProblem lp = load(problem_path, flags);
    auto sings = find_singularities(lp.pf.problem);
    std::string table = "xi,kind,gap\n";
    for (const auto& s : sings)
        table += fmt(s.xi) + "," + to_string(s.kind) + "," + fmt(s.gap_at_xi) + "\n";
    if (table_out) *table_out = table;

    RunReport rep;
    rep.command = "singularities";
    rep.input_path = problem_path;
    rep.input_digest = lp.digest;
    rep.diagnostics.emplace_back("count", std::to_string(sings.size()));
    rep.diagnostics.emplace_back("singularities", singularity_summary(sings));
    return rep;
}

RunReport cmd_verify(const std::string& problem_path, const CliFlags& flags,
                     std::string* table_out) {
    LoadedProblem lp = load(problem_path, flags);
    auto checks = run_checks(lp.pf);

    std::string table = "check,status,deviation,tolerance,note\n";
    std::string first_fail;
    int passed = 0, failed = 0, skipped = 0;
    for (const auto& c : checks) {
        std::string status = !c.ran ? "skip" : (c.pass ? "pass" : "FAIL");
        if (!c.ran) ++skipped;
        else if (c.pass) ++passed;
        else {
            ++failed;
            if (first_fail.empty()) first_fail = c.name;
        }
        table += c.name + "," + status + "," + (c.ran ? fmt(c.deviation) : "") + "," +
                 (c.ran ? fmt(c.tolerance) : "") + "," + c.note + "\n";
    }
    if (table_out) *table_out = table;

    RunReport rep;
    rep.command = "verify";
    rep.input_path = problem_path;
    rep.input_digest = lp.digest;
    rep.ok = failed == 0;
    rep.diagnostics.emplace_back("passed", std::to_string(passed));
    rep.diagnostics.emplace_back("failed", std::to_string(failed));
    rep.diagnostics.emplace_back("skipped", std::to_string(skipped));
    if (!first_fail.empty()) rep.diagnostics.emplace_back("first_failed", first_fail);
    return rep;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ParseError*>(&e)) return 1;
    if (dynamic_cast<const EntirelyDegenerateError*>(&e)) return 3;
    return 2;
}

}  // namespace dtmm
