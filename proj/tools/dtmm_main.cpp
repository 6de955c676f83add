#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dtmm/runner.hpp"

namespace {

void add_common(CLI::App* cmd, dtmm::CliFlags& flags) {
    cmd->add_option_function<std::string>(
           "--method",
           [&flags](const std::string& m) {
               if (m == "ode") flags.method = dtmm::Method::ode;
               else if (m == "exp") flags.method = dtmm::Method::exp;
               else throw CLI::ValidationError("--method must be 'ode' or 'exp'");
           },
           "Propagation method (ode|exp), overriding the problem file");
    cmd->add_option(
        "--step", [&flags](const CLI::results_t& r) { flags.step = std::stod(r[0]); return true; },
        "Propagation step size, overriding the problem file");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Transfer-matrix solver for linear ODEs with variable coefficients"};
    app.require_subcommand(1);

    dtmm::CliFlags flags;
    std::string file, out = "dtmm_out.csv";
    double x1 = 0, x2 = 0;

    auto* solve = app.add_subcommand("solve", "Solve an initial-value problem to CSV");
    solve->add_option("file", file, "Problem file")->required();
    solve->add_option("--out", out, "Output CSV path");
    solve->add_flag("--oracle", flags.oracle,
                    "Also run the reference companion-system solver and report the "
                    "max relative error");
    solve->add_flag("--derivs", flags.derivatives, "Emit derivative columns");
    add_common(solve, flags);

    auto* transfer =
        app.add_subcommand("transfer", "Print the transfer matrix between two points");
    transfer->add_option("file", file, "Problem file")->required();
    transfer->add_option("x1", x1, "Start point")->required();
    transfer->add_option("x2", x2, "End point")->required();
    add_common(transfer, flags);

    auto* basis = app.add_subcommand("basis", "Write the fundamental solution basis to CSV");
    basis->add_option("file", file, "Problem file")->required();
    basis->add_option("--out", out, "Output CSV path");
    add_common(basis, flags);

    auto* sing = app.add_subcommand("singularities", "List characteristic-root collisions");
    sing->add_option("file", file, "Problem file")->required();
    add_common(sing, flags);

    auto* verify = app.add_subcommand("verify", "Run the identity checks for a problem");
    verify->add_option("file", file, "Problem file")->required();
    add_common(verify, flags);

    CLI11_PARSE(app, argc, argv);

    try {
        dtmm::RunReport rep;
        std::string table;
        if (solve->parsed()) {
            rep = dtmm::cmd_solve(file, out, flags);
        } else if (transfer->parsed()) {
            rep = dtmm::cmd_transfer(file, x1, x2, flags, &table);
        } else if (basis->parsed()) {
            rep = dtmm::cmd_basis(file, out, flags);
        } else if (sing->parsed()) {
            rep = dtmm::cmd_singularities(file, flags, &table);
        } else {
            rep = dtmm::cmd_verify(file, flags, &table);
        }
        if (!table.empty()) std::cout << table;
        std::cout << rep.to_text();
        if (!rep.ok) {
            for (const auto& [k, v] : rep.diagnostics)
                if (k == "first_failed") std::cerr << "first failing check: " << v << "\n";
            return 2;
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return dtmm::exit_code_for(e);
    }
}
