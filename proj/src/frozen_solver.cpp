#include "gmsolve/frozen_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "gmsolve/errors.hpp"

namespace gmsolve {

namespace {

// Smallest Dirichlet eigenvalue of -Laplace on the domain.
double first_eigenvalue(Shape shape) {
    return shape == Shape::UnitSquare ? 2.0 * kPi * kPi : 5.783185962946784;
}

ScalarField initial_guess(const ScalarField& psi, const FrozenConfig& cfg) {
    if (cfg.initial) {
        require_conformable(*cfg.initial, psi, "solve_frozen initial guess");
        ScalarField u = *cfg.initial;
        copy_boundary(psi, u);
        return u;
    }
    ScalarField u = psi;
    double sum = 0.0;
    std::size_t count = 0;
    for (int node : psi.grid().boundary_nodes()) {
        sum += psi[node];
        ++count;
    }
    for (double v : psi.boundary_values()) {
        sum += v;
        ++count;
    }
    const double fill = count ? sum / static_cast<double>(count) : 0.0;
    for (int node : psi.grid().interior_nodes()) u[node] = fill;
    return u;
}

}  // namespace

double data_scale(const ScalarField& rhs, const ScalarField& psi) {
    return 1.0 + rhs.interior_sup_norm() + psi.boundary_sup_norm();
}

double auto_tau(const Ellipticity& e, double h) {
    return 0.9 * h * h / (4.0 * e.Lambda + 2.0 * e.gamma * h + e.omega * h * h);
}

FrozenSolution solve_frozen(const OperatorSpec& spec, const ScalarField& rhs, const ScalarField& psi,
                            const FrozenConfig& cfg) {
    const ResidualOperator op(spec, rhs.grid_handle(), cfg.scheme);
    return solve_frozen(op, rhs, psi, cfg);
}

FrozenSolution solve_frozen(const ResidualOperator& op, const ScalarField& rhs, const ScalarField& psi,
                            const FrozenConfig& cfg) {
    require_conformable(rhs, psi, "solve_frozen");
    if (&op.grid() != &rhs.grid()) throw ConfigError("solve_frozen: operator bound to a different grid");
    if (cfg.max_iters < 1) throw ConfigError("max_iters must be positive", "solver.max_iters");
    if (cfg.tau && !(*cfg.tau > 0.0)) throw ConfigError("tau must be positive", "solver.tau");
    if (cfg.tol_residual && !(*cfg.tol_residual > 0.0))
        throw ConfigError("tol_residual must be positive", "solver.tol_residual");

    const DomainGrid& g = rhs.grid();
    const Ellipticity& e = op.ellipticity_of();
    const double h = g.h();
    const std::size_t count = g.interior_count();

    SolveReport rep;
    rep.data_scale = data_scale(rhs, psi);
    rep.tol_residual = cfg.tol_residual.value_or(1e-8 * rep.data_scale);
    rep.tau = (cfg.tau ? *cfg.tau : auto_tau(e, h)) * cfg.tau_scale;

    std::vector<double> step(count), inertia(count, 0.0);
    for (std::size_t s = 0; s < count; ++s) {
        if (cfg.tau) {
            step[s] = rep.tau;
        } else {
            // Same bound as the auto step, with the node's own diagonal weight.
            const double diag = e.Lambda * op.diagonal_scale(static_cast<int>(s)) + 2.0 * e.gamma / h + e.omega;
            step[s] = cfg.tau_scale * 0.9 / diag;
        }
    }
    if (cfg.momentum) {
        const double q = std::sqrt(std::min(1.0, rep.tau * e.lambda * first_eigenvalue(g.shape())));
        rep.momentum = std::clamp((1.0 - q) * (1.0 - q), 0.0, 0.999);
        // Shortley-Weller rows are not symmetrisable; keep them on plain steps.
        for (std::size_t s = 0; s < count; ++s)
            if (g.regular(static_cast<int>(s))) inertia[s] = rep.momentum;
    }

    ScalarField u = initial_guess(psi, cfg);
    std::vector<double> r(count), velocity(count, 0.0);
    double first = -1.0, best = std::numeric_limits<double>::infinity();
    for (int it = 0;; ++it) {
        op.residual(u, rhs, r);
        double res = 0.0;
        bool finite = true;
        for (double v : r) {
            finite = finite && std::isfinite(v);
            res = std::max(res, std::abs(v));
        }
        if (!finite) res = std::numeric_limits<double>::infinity();
        rep.residual_history.push_back(res);
        if (first < 0.0) first = res;
        if (res <= rep.tol_residual) {
            rep.iters = it;
            rep.final_residual = res;
            rep.converged = true;
            break;
        }
        if (!finite || res > 1e6 * std::max(first, rep.tol_residual)) {
            std::ostringstream msg;
            msg << "pseudo-time iteration diverged at iteration " << it << " (residual " << res << ", tau " << rep.tau
                << ")";
            throw DivergenceError(msg.str(), std::move(rep.residual_history));
        }
        if (it >= cfg.max_iters) {
            std::ostringstream msg;
            msg << "no convergence in " << cfg.max_iters << " iterations (residual " << res << ", target "
                << rep.tol_residual << ")";
            throw NonConvergenceError(msg.str(), std::move(rep.residual_history));
        }
        if (res > 10.0 * best) std::fill(velocity.begin(), velocity.end(), 0.0);
        best = std::min(best, res);
        for (std::size_t s = 0; s < count; ++s) {
            velocity[s] = inertia[s] * velocity[s] + step[s] * r[s];
            u.interior(static_cast<int>(s)) += velocity[s];
        }
    }
    rep.abp = abp_check(u, rhs, psi, cfg.abp_p, rep.tol_residual, e);
    if (cfg.observer) cfg.observer(rep);
    return {std::move(u), std::move(rep)};
}

AbpRecord abp_check(const ScalarField& u, const ScalarField& rhs, const ScalarField& psi, double p, double tol,
                    const Ellipticity& ell) {
    require_conformable(u, rhs, "abp_check");
    require_conformable(u, psi, "abp_check");
    if (!(p >= 1.0)) throw ConfigError("ABP exponent must be at least 1", "abp.p");
    const DomainGrid& g = u.grid();
    const auto nodes = g.interior_nodes();
    const auto w = g.cell_measures();

    AbpRecord a;
    a.p = p;
    a.slack = 10.0 * tol;
    a.sup_u = u.interior_max();
    a.sup_boundary_pos = std::max(0.0, psi.boundary_max());
    double integral = 0.0, rhs_min = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < nodes.size(); ++s) {
        const double f = rhs[nodes[s]];
        rhs_min = std::min(rhs_min, f);
        integral += std::pow(std::max(-f, 0.0), p) * w[s];
    }
    a.source_norm = std::pow(integral, 1.0 / p);
    const double excess = a.sup_u - a.sup_boundary_pos;
    if (excess <= 0.0) {
        a.c_abp = 0.0;
    } else {
        a.c_abp = a.source_norm > 0.0 ? excess / a.source_norm : std::numeric_limits<double>::infinity();
    }
    if (ell.gamma == 0.0 && p >= 2.0 && ell.lambda > 0.0) {
        a.reference_constant =
            g.diameter() / (2.0 * std::sqrt(kPi) * ell.lambda) * std::pow(g.total_measure(), 0.5 - 1.0 / p);
    }
    a.rhs_bound = a.sup_boundary_pos + a.reference_constant * a.source_norm;
    a.max_principle_applies = rhs_min >= 0.0;
    if (a.max_principle_applies) a.passed = a.sup_u <= a.sup_boundary_pos + a.slack;
    if (a.reference_constant > 0.0) a.passed = a.passed && a.sup_u <= a.rhs_bound + a.slack;
    return a;
}

std::string SandwichReport::describe() const {
    std::ostringstream out;
    out << (passed ? "inside" : "outside") << " both Pucci classes: upper margin " << upper_margin
        << ", lower margin " << lower_margin << ", slack " << slack;
    if (!passed) out << ", worst node " << worst_node;
    return out.str();
}

SandwichReport sandwich_check(const ScalarField& u, const OperatorSpec& spec, const ScalarField& rhs, double tol) {
    require_conformable(u, rhs, "sandwich_check");
    const GridHandle& grid = u.grid_handle();
    const BoundOperator op(spec, grid);
    const Ellipticity& e = spec.ellipticity;
    const double h = grid->h();
    SandwichReport rep;
    rep.slack = 10.0 * tol + h * h * (1.0 + u.interior_sup_norm());
    rep.upper_margin = rep.lower_margin = std::numeric_limits<double>::infinity();
    double worst = std::numeric_limits<double>::infinity();
    const auto nodes = grid->interior_nodes();
    for (std::size_t s = 0; s < nodes.size(); ++s) {
        const int slot = static_cast<int>(s);
        Vec2 grad;
        SymMat2 hess;
        node_derivatives(u, slot, grad, hess);
        const double f = rhs[nodes[s]] - op.eval(slot, {}, {}, 0.0);
        const double lower_order = e.gamma * grad.norm() + e.omega * std::abs(u[nodes[s]]);
        const double up = pucci_plus(hess, e) + lower_order - f;
        const double lo = f + lower_order - pucci_minus(hess, e);
        rep.upper_margin = std::min(rep.upper_margin, up);
        rep.lower_margin = std::min(rep.lower_margin, lo);
        if (std::min(up, lo) < worst) {
            worst = std::min(up, lo);
            rep.worst_node = nodes[s];
        }
    }
    rep.passed = worst >= -rep.slack;
    return rep;
}

nlohmann::json to_json(const AbpRecord& a) {
    return {{"sup_u", a.sup_u},
            {"sup_boundary_pos", a.sup_boundary_pos},
            {"source_norm", a.source_norm},
            {"p", a.p},
            {"c_abp", std::isfinite(a.c_abp) ? nlohmann::json(a.c_abp) : nlohmann::json(nullptr)},
            {"reference_constant", a.reference_constant},
            {"rhs_bound", a.rhs_bound},
            {"slack", a.slack},
            {"max_principle_applies", a.max_principle_applies},
            {"passed", a.passed}};
}

nlohmann::json to_json(const SolveReport& r) {
    return {{"iters", r.iters},
            {"final_residual", r.final_residual},
            {"tol_residual", r.tol_residual},
            {"tau", r.tau},
            {"momentum", r.momentum},
            {"data_scale", r.data_scale},
            {"converged", r.converged},
            {"abp", to_json(r.abp)}};
}

void write_residual_csv(const SolveReport& r, std::ostream& out) {
    out << "iter,residual\n";
    char buf[64];
    for (std::size_t k = 0; k < r.residual_history.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g\n", k, r.residual_history[k]);
        out << buf;
    }
}

}  // namespace gmsolve
