#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dtmm/problem.hpp"

namespace dtmm {

/// Outcome of one CLI command: what ran, on which input, which files were
/// written, and stable key/value diagnostics.
struct RunReport {
    std::string command;
    std::string input_path;
    std::string input_digest;  // FNV-1a 64 of the raw file bytes
    std::vector<std::string> outputs;
    std::vector<std::pair<std::string, std::string>> diagnostics;
    bool ok = true;  // verify: all checks passed

    std::string to_text() const;
};

struct CliFlags {
    std::optional<Method> method;
    std::optional<double> step;
    bool oracle = false;
    bool derivatives = false;
    std::string out;
};

RunReport cmd_solve(const std::string& problem_path, const std::string& output_path,
                    const CliFlags& flags);
RunReport cmd_transfer(const std::string& problem_path, double x1, double x2,
                       const CliFlags& flags, std::string* table_out = nullptr);
RunReport cmd_basis(const std::string& problem_path, const std::string& output_path,
                    const CliFlags& flags);
RunReport cmd_singularities(const std::string& problem_path, const CliFlags& flags,
                            std::string* table_out = nullptr);
RunReport cmd_verify(const std::string& problem_path, const CliFlags& flags,
                     std::string* table_out = nullptr);

/// Exit-code mapping: 1 parse error, 2 numeric failure, 3 entirely degenerate.
int exit_code_for(const std::exception& e);

}  // namespace dtmm
