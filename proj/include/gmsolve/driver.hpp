#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "gmsolve/frozen_solver.hpp"
#include "gmsolve/nonlocal_source.hpp"

namespace gmsolve {

struct OuterConfig {
    double theta = 0.5;                 // relaxation weight in (0, 1]
    std::optional<double> tol_outer;    // default 1e-6 * data_scale
    int max_outer = 200;
    std::optional<double> delta0;       // default 0.1 * (max psi - min psi + 1)
    double delta_min = 1e-4;
    FrozenConfig frozen;

    void validate() const;
};

struct TraceRow {
    double delta = 0.0;
    int outer_iter = 0;
    double sup_diff = 0.0;
    double lip_diff = 0.0;
    int inner_iters = 0;
    double residual = 0.0;
    double flatness = 0.0;
};

struct ContinuationTrace {
    std::vector<TraceRow> rows;
    std::vector<double> deltas;        // levels actually solved
    std::vector<double> level_diffs;   // sup |u_{delta_k} - u_{delta_k+1}|
    bool cauchy_monotone = true;
    bool stagnated = false;
    std::vector<std::string> warnings;

    /// `delta,outer_iter,sup_diff,lip_diff,inner_iters,residual,flatness`
    void write_csv(std::ostream& out) const;
    nlohmann::json to_json() const;
};

struct FixedPointResult {
    ScalarField u;          // u_delta = T(u_n) at the last iterate
    ScalarField source;     // G^delta of u
    int outer_iters = 0;
    double self_residual = 0.0;  // sup |F(D2u, Du, u, x) - G^delta_u - f|
    double tol_outer = 0.0;
    SolveReport last_inner;
    ContinuationTrace trace;
};

struct ContinuationResult {
    ScalarField u;
    ScalarField source;
    double delta = 0.0;          // last level
    double self_residual = 0.0;
    double tol_outer = 0.0;
    SolveReport last_inner;
    ContinuationTrace trace;
};

/// Sup-norm scale of the data: 1 + ||f|| + ||psi||.
double outer_data_scale(const ScalarField& f, const ScalarField& psi);

/// T(v) = solution of F = G^delta_v + f with u = psi.
FrozenSolution picard_step(const ResidualOperator& op, const ScalarField& v, const SourceSpec& src,
                           const ScalarField& f, const ScalarField& psi, const FrozenConfig& cfg);
FrozenSolution picard_step(const OperatorSpec& spec, const ScalarField& v, const SourceSpec& src,
                           const ScalarField& f, const ScalarField& psi, const FrozenConfig& cfg = {});

/// Damped Picard iteration u <- (1 - theta) u + theta T(u) at fixed delta,
/// started from `start` or from the frozen solution with source f. Stops
/// when both the sup and the Lipschitz difference fall below tol_outer.
FixedPointResult fixed_point_solve(const OperatorSpec& spec, const SourceSpec& src, const ScalarField& f,
                                   const ScalarField& psi, const OuterConfig& cfg,
                                   const std::optional<ScalarField>& start = std::nullopt);

/// delta_0, delta_0/2, ... while above delta_min, then delta_min.
std::vector<double> delta_schedule(const OuterConfig& cfg, const ScalarField& psi);

/// Fixed-point solves along the delta schedule with warm starts.
ContinuationResult delta_continuation(const OperatorSpec& spec, const SourceSpec& src, const ScalarField& f,
                                      const ScalarField& psi, const OuterConfig& cfg);

/// Radial profile on [0, 1] with value and slope per knot; cubic Hermite between knots.
struct RadialProfile {
    std::vector<double> r, u, du;

    double operator()(double radius) const;
    double slope(double radius) const;
};

/// Solves u'' + u'/r = g(pi (1 - r^2)) + f(r), u'(0) = 0, u(1) = 0 by
/// quadrature with n_r Simpson panels (n_r >= 10^4). Throws DiagnosticError
/// when g + f is negative somewhere, since the level sets are then no
/// longer the outer annuli.
RadialProfile radial_oracle(const SourceFunction& g, const std::function<double(double)>& f, int n_r = 20000);

}  // namespace gmsolve
