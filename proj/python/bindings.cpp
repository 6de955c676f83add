#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dtmm/oracle.hpp"
#include "dtmm/solution.hpp"
#include "dtmm/verify.hpp"

namespace py = pybind11;
using namespace dtmm;

namespace {

std::vector<std::vector<cplx>> to_rows(const CMatrix& m) {
    std::vector<std::vector<cplx>> rows(static_cast<std::size_t>(m.rows()));
    for (int i = 0; i < m.rows(); ++i) {
        rows[std::size_t(i)].resize(static_cast<std::size_t>(m.cols()));
        for (int j = 0; j < m.cols(); ++j) rows[std::size_t(i)][std::size_t(j)] = m(i, j);
    }
    return rows;
}

py::dict grid_to_dict(const SolutionGrid& g) {
    py::dict d;
    d["x"] = g.xs;
    d["f"] = g.values;
    py::list derivs;
    for (const auto& dv : g.derivs) derivs.append(dv);
    d["derivs"] = derivs;
    d["gap"] = g.diagnostics.gap;
    d["fd_residual"] = g.diagnostics.ode_residual;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Differential transfer-matrix solver for linear ODEs with "
              "variable coefficients";

    // Base first: translators run newest-first, so the derived registrations
    // must come after the base to take precedence.
    auto base = py::register_exception<Error>(m, "DtmmError");
    py::register_exception<ParseError>(m, "ParseError", base.ptr());
    py::register_exception<EntirelyDegenerateError>(m, "EntirelyDegenerateError",
                                                    base.ptr());

    py::enum_<Method>(m, "Method")
        .value("ode", Method::ode)
        .value("exp", Method::exp);

    py::class_<Problem>(m, "Problem")
        .def_static("from_text", [](const std::string& text) { return parse_problem(text); },
                    py::arg("text"), "Parse a problem from problem-file text")
        .def_property_readonly("order", &Problem::order)
        .def_property_readonly("domain",
                               [](const Problem& p) {
                                   return std::make_pair(p.x_lo(), p.x_hi());
                               })
        .def("coeffs", &Problem::eval_coeffs, py::arg("x"),
             "Evaluate (a_0(x), ..., a_{n-1}(x))")
        .def("__repr__", [](const Problem& p) {
            return "<dtmm.Problem order=" + std::to_string(p.order()) + ">";
        });

    m.def("parse_problem_file",
          [](const std::string& text) {
              ProblemFile pf = parse_problem_file(text);
              return py::make_tuple(pf.problem, pf.ic, pf.grid);
          },
          py::arg("text"), "Parse problem-file text into (problem, ic, grid)");

    m.def("solve",
          [](const Problem& p, double x0, const std::vector<cplx>& ic,
             const std::vector<double>& xs, bool derivatives) {
              return grid_to_dict(solve_grid(p, x0, ic, xs, derivatives));
          },
          py::arg("problem"), py::arg("x0"), py::arg("ic"), py::arg("xs"),
          py::arg("derivatives") = true,
          "Propagate the initial data across the sample points");

    m.def("oracle_solve",
          [](const Problem& p, double x0, const std::vector<cplx>& ic,
             const std::vector<double>& xs) {
              return grid_to_dict(oracle_solve(p, x0, ic, xs));
          },
          py::arg("problem"), py::arg("x0"), py::arg("ic"), py::arg("xs"),
          "Reference companion-system integration of the same problem");

    m.def("transfer",
          [](const Problem& p, double x1, double x2) {
              TransferMatrix Q = propagate_robust(p, x1, x2);
              return py::make_tuple(to_rows(Q.Q), det(Q.Q));
          },
          py::arg("problem"), py::arg("x1"), py::arg("x2"),
          "Transfer matrix and its determinant (robust to singularities)");

    m.def("transfer_det_formula",
          [](const Problem& p, double x1, double x2) {
              RootFrame fr1 = track_frame(std::nullopt, p, x1);
              RootFrame fr2;
              propagate_ode_from(p, fr1, x2, &fr2);
              return transfer_det_formula(p, fr1, fr2);
          },
          py::arg("problem"), py::arg("x1"), py::arg("x2"),
          "Closed-form determinant of the transfer matrix");

    m.def("singularities",
          [](const Problem& p) {
              py::list out;
              for (const auto& s : find_singularities(p)) {
                  py::dict d;
                  d["xi"] = s.xi;
                  d["kind"] = std::string(to_string(s.kind));
                  d["gap"] = s.gap_at_xi;
                  out.append(d);
              }
              return out;
          },
          py::arg("problem"), "Isolated characteristic-root collisions in the domain");

    m.def("singular_jump",
          [](const Problem& p, double xi) {
              for (const auto& s : find_singularities(p))
                  if (std::abs(s.xi - xi) < 1e-6)
                      return to_rows(singular_jump(p, s).Q);
              throw Error("no singularity near the given point");
          },
          py::arg("problem"), py::arg("xi"),
          "Finite jump matrix over the singularity nearest xi");

    m.def("fundamental_basis",
          [](const Problem& p, double x0, const std::vector<double>& xs) {
              py::list out;
              for (const auto& g : fundamental_basis(p, x0, xs)) out.append(grid_to_dict(g));
              return out;
          },
          py::arg("problem"), py::arg("x0"), py::arg("xs"));

    m.def("normalize_form",
          [](const Problem& p) {
              NormalizedForm nf = normalize_form(p);
              return py::make_tuple(nf.problem, nf.weight.source_text);
          },
          py::arg("problem"),
          "Transformed problem with vanishing a_{n-1} and the weight source text");

    m.def("verify",
          [](const std::string& text) {
              ProblemFile pf = parse_problem_file(text);
              py::list out;
              for (const auto& c : run_checks(pf)) {
                  py::dict d;
                  d["name"] = c.name;
                  d["ran"] = c.ran;
                  d["pass"] = c.pass;
                  d["deviation"] = c.deviation;
                  d["tolerance"] = c.tolerance;
                  d["note"] = c.note;
                  out.append(d);
              }
              return out;
          },
          py::arg("problem_text"), "Run the identity checks for a problem file");
}
