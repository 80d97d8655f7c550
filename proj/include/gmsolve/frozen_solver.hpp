#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "gmsolve/calculus.hpp"
#include "gmsolve/field.hpp"
#include "gmsolve/operators.hpp"

namespace gmsolve {

struct SolveReport;

struct FrozenConfig {
    std::optional<double> tau;            // fixed step; auto when empty
    std::optional<double> tol_residual;   // default 1e-8 * data_scale
    int max_iters = 200000;
    Scheme scheme;
    /// Heavy-ball acceleration of the pseudo-time flow. Off gives the plain
    /// explicit (Jacobi) iteration.
    bool momentum = true;
    /// Multiplies every step; values above 1 are only useful for testing
    /// the divergence guard.
    double tau_scale = 1.0;
    /// Starting field; the constant boundary average when empty.
    std::optional<ScalarField> initial;
    /// Exponent of the source norm in the ABP check.
    double abp_p = 2.0;
    /// Called with the report of every converged solve.
    std::function<void(const SolveReport&)> observer;
};

/// Post-solve maximum principle check.
struct AbpRecord {
    double sup_u = 0.0;              // sup over interior nodes
    double sup_boundary_pos = 0.0;   // sup of u+ over boundary data
    double source_norm = 0.0;        // L^p norm of the negative part of rhs
    double c_abp = 0.0;              // measured (sup_u - sup_boundary_pos)+ / source_norm
    double reference_constant = 0.0; // classical constant when gamma = 0, else 0
    double rhs_bound = 0.0;          // sup_boundary_pos + reference_constant * source_norm
    double p = 2.0;
    double slack = 0.0;
    bool max_principle_applies = false;  // rhs >= 0 everywhere
    bool passed = true;
};

struct SolveReport {
    int iters = 0;
    double final_residual = 0.0;
    double tol_residual = 0.0;
    double tau = 0.0;
    double momentum = 0.0;
    double data_scale = 1.0;
    bool converged = false;
    std::vector<double> residual_history;
    AbpRecord abp;
};

struct FrozenSolution {
    ScalarField u;
    SolveReport report;
};

double data_scale(const ScalarField& rhs, const ScalarField& psi);
/// 0.9 h^2 / (4 Lambda + 2 gamma h + omega h^2).
double auto_tau(const Ellipticity& e, double h);

/// Solves F(D2u, Du, u, x) = rhs in the interior with u = psi on the
/// boundary by explicit pseudo-time stepping u <- u + tau (F - rhs).
///
/// Throws NonConvergenceError (with the residual history) after max_iters
/// and DivergenceError on NaN or runaway growth.
FrozenSolution solve_frozen(const OperatorSpec& spec, const ScalarField& rhs, const ScalarField& psi,
                            const FrozenConfig& cfg = {});
FrozenSolution solve_frozen(const ResidualOperator& op, const ScalarField& rhs, const ScalarField& psi,
                            const FrozenConfig& cfg = {});

/// Sign convention of an increasing F: a positive interior bump needs a
/// negative source, so the bound uses ||rhs^-||_p, and the plain maximum
/// principle applies when rhs >= 0.
AbpRecord abp_check(const ScalarField& u, const ScalarField& rhs, const ScalarField& psi, double p, double tol,
                    const Ellipticity& ell = {});

struct SandwichReport {
    bool passed = true;
    double slack = 0.0;
    double upper_margin = 0.0;  // min of M+(D2u) + gamma|Du| + omega|u| - rhs' + slack
    double lower_margin = 0.0;  // min of rhs' + omega|u| + gamma|Du| - M-(D2u) + slack
    int worst_node = -1;

    std::string describe() const;
};

/// Membership of u in both Pucci classes for the source rhs - F(0,0,0,x).
SandwichReport sandwich_check(const ScalarField& u, const OperatorSpec& spec, const ScalarField& rhs, double tol);

nlohmann::json to_json(const SolveReport& r);
nlohmann::json to_json(const AbpRecord& r);
/// `iter,residual`
void write_residual_csv(const SolveReport& r, std::ostream& out);

}  // namespace gmsolve
