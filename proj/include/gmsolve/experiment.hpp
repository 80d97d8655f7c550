#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gmsolve/config.hpp"
#include "gmsolve/driver.hpp"

namespace gmsolve {

enum ExitCode : int { ExitPass = 0, ExitFailure = 1, ExitConfig = 2 };

/// Value of GMSOLVE_OUTPUT_ROOT, or the working directory.
std::filesystem::path output_root();

struct ErrorRow {
    int n = 0;
    double h = 0.0;
    double error = 0.0;
    std::optional<double> ratio;  // error at the previous n over this one
};

struct OracleRow {
    int n = 0;
    double h = 0.0;
    double delta_min = 0.0;
    double error = 0.0;
    double measured_constant = 0.0;  // error / (h^2 + delta_min)
    double bound = 0.0;              // C (h^2 + delta_min)
    bool passed = false;
};

struct RunSummary {
    int exit_code = ExitPass;
    std::filesystem::path directory;
    std::vector<std::string> messages;
    std::vector<ErrorRow> errors;
    std::vector<OracleRow> oracle;
};

/// Sup error of u against the radial oracle at interior nodes.
OracleRow compare_radial(const ScalarField& u, const RadialProfile& oracle, double delta_min, double constant);

/// Data field from an expression or a field CSV on the same lattice.
ScalarField load_data(const GridHandle& grid, const std::string& expr, const std::string& csv,
                      const std::string& field, const std::string& base_dir);

/// Solves for every n in the config and writes artifacts under
/// output_root() / output.directory / name. Config problems throw
/// ConfigError; solver failures set exit_code = 1 and keep what was written.
RunSummary run_experiment(const ExperimentConfig& cfg, const std::string& base_dir, std::ostream& log);

/// Samples the radial oracle of a grad_mercier config on the disk.
RadialProfile radial_oracle_for(const ExperimentConfig& cfg);

void write_error_table(const std::vector<ErrorRow>& rows, std::ostream& out);
void write_oracle_table(const std::vector<OracleRow>& rows, std::ostream& out);

}  // namespace gmsolve
