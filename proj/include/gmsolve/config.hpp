#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gmsolve/driver.hpp"
#include "gmsolve/grid.hpp"
#include "gmsolve/operators.hpp"

namespace gmsolve {

struct DomainConfig {
    Shape shape = Shape::UnitSquare;
    std::vector<int> n{33};  // one solve per entry

    bool operator==(const DomainConfig&) const = default;
};

/// Operator parameters. For asymptotically_convex the base kind reads
/// lambda, Lambda and the coefficient keys; gamma and omega belong to F.
struct OperatorConfig {
    std::string kind = "trace";
    std::string base = "trace";
    double lambda = 1.0;
    double Lambda = 1.0;
    double gamma = 0.0;
    double omega = 0.0;
    std::string a_xx = "1", a_xy = "0", a_yy = "1";
    std::vector<std::string> family;  // "xx; xy; yy" per member
    double kappa = 0.0;
    std::string rho = "0", c = "0", b = "0";

    bool operator==(const OperatorConfig&) const = default;
};

struct SourceConfig {
    std::string kind = "none";  // none | grad_mercier
    std::string g = "affine";   // affine | exp_decay | table
    double a = 0.0;
    double b = 0.0;
    std::string table;          // CSV path for g = table
    std::optional<double> delta0;
    double delta_min = 1e-4;
    bool rescale = false;

    bool operator==(const SourceConfig&) const = default;
};

/// Each of f and psi is an expression, or a field CSV when the *_csv key is set.
struct DataConfig {
    std::string f = "0";
    std::string psi = "0";
    std::string f_csv;
    std::string psi_csv;
    std::string exact;  // manufactured solution, enables the error table

    bool operator==(const DataConfig&) const = default;
};

struct SolverConfig {
    std::optional<double> tau;
    std::optional<double> tol_residual;
    int max_iters = 200000;
    std::string scheme = "eigen";  // eigen | wide
    int directions = 16;
    int arm = 0;
    bool momentum = true;
    double theta = 0.5;
    std::optional<double> tol_outer;
    int max_outer = 200;

    bool operator==(const SolverConfig&) const = default;
};

struct DiagnosticsConfig {
    double p = 4.0;
    double alpha = 0.5;
    std::vector<double> radii;          // empty: 2h, 4h, ..., 1/4
    std::string oracle = "none";        // none | radial
    double oracle_constant = 1.0;       // C in |u - u_oracle| <= C (h^2 + delta_min)

    bool operator==(const DiagnosticsConfig&) const = default;
};

struct OutputConfig {
    std::string directory = "out";
    std::vector<std::string> formats{"csv", "json"};

    bool operator==(const OutputConfig&) const = default;
};

struct ExperimentConfig {
    std::string name = "experiment";
    std::uint64_t seed = 1;
    DomainConfig domain;
    OperatorConfig op;
    SourceConfig source;
    DataConfig data;
    SolverConfig solver;
    DiagnosticsConfig diagnostics;
    OutputConfig output;

    bool operator==(const ExperimentConfig&) const = default;
};

/// Parses the TOML subset: [section] headers, key = value with strings,
/// numbers, booleans and flat arrays, # comments. Errors carry the line
/// and the dotted key.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& cfg);

OperatorSpec build_operator(const OperatorConfig& cfg);
/// Relative table paths resolve against base_dir.
SourceSpec build_source(const SourceConfig& cfg, const std::string& base_dir = ".");
FrozenConfig build_frozen(const SolverConfig& cfg);
OuterConfig build_outer(const ExperimentConfig& cfg);

}  // namespace gmsolve
