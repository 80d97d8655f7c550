#include "gmsolve/driver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

#include "gmsolve/diagnostics.hpp"
#include "gmsolve/errors.hpp"

namespace gmsolve {

namespace {

ScalarField add_interior(const ScalarField& a, const ScalarField& b) {
    require_conformable(a, b, "source + f");
    ScalarField out = a;
    for (int node : a.grid().interior_nodes()) out[node] = a[node] + b[node];
    return out;
}

double sup_difference(const ScalarField& a, const ScalarField& b) {
    double m = 0.0;
    for (int node : a.grid().interior_nodes()) m = std::max(m, std::abs(a[node] - b[node]));
    return m;
}

ScalarField difference(const ScalarField& a, const ScalarField& b) {
    ScalarField d(a.grid_handle());
    const DomainGrid& g = a.grid();
    for (std::size_t k = 0; k < g.node_count(); ++k) {
        const int node = static_cast<int>(k);
        if (g.has_data(node)) d[node] = a[node] - b[node];
    }
    for (std::size_t k = 0; k < d.boundary_values().size(); ++k)
        d.boundary_values()[k] = a.boundary_values()[k] - b.boundary_values()[k];
    return d;
}

[[noreturn]] void rethrow_annotated(const std::string& context) {
    try {
        throw;
    } catch (const NonConvergenceError& e) {
        throw NonConvergenceError(context + ": " + e.what(), e.history());
    } catch (const DivergenceError& e) {
        throw DivergenceError(context + ": " + e.what(), e.history());
    }
}

}  // namespace

void OuterConfig::validate() const {
    if (!(theta > 0.0 && theta <= 1.0)) throw ConfigError("theta must lie in (0, 1]", "solver.theta");
    if (tol_outer && !(*tol_outer > 0.0)) throw ConfigError("tol_outer must be positive", "solver.tol_outer");
    if (max_outer < 1) throw ConfigError("max_outer must be positive", "solver.max_outer");
    if (!(delta_min > 0.0)) throw ConfigError("delta_min must be positive", "source.delta_min");
    if (delta0 && !(*delta0 > delta_min)) throw ConfigError("delta0 must exceed delta_min", "source.delta0");
}

void ContinuationTrace::write_csv(std::ostream& out) const {
    out << "delta,outer_iter,sup_diff,lip_diff,inner_iters,residual,flatness\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%d,%.17g,%.17g,%d,%.17g,%.17g\n", r.delta, r.outer_iter, r.sup_diff,
                      r.lip_diff, r.inner_iters, r.residual, r.flatness);
        out << buf;
    }
}

nlohmann::json ContinuationTrace::to_json() const {
    return {{"deltas", deltas},
            {"level_diffs", level_diffs},
            {"cauchy_monotone", cauchy_monotone},
            {"stagnated", stagnated},
            {"outer_iterations", rows.size()},
            {"warnings", warnings}};
}

double outer_data_scale(const ScalarField& f, const ScalarField& psi) {
    return 1.0 + f.interior_sup_norm() + psi.boundary_sup_norm();
}

FrozenSolution picard_step(const ResidualOperator& op, const ScalarField& v, const SourceSpec& src,
                           const ScalarField& f, const ScalarField& psi, const FrozenConfig& cfg) {
    if (!(src.delta > 0.0)) throw ConfigError("picard step needs delta > 0", "source.delta");
    const ScalarField rhs = add_interior(mollified_source(v, src), f);
    try {
        return solve_frozen(op, rhs, psi, cfg);
    } catch (const Error&) {
        char ctx[64];
        std::snprintf(ctx, sizeof ctx, "frozen solve at delta %.3g", src.delta);
        rethrow_annotated(ctx);
    }
}

FrozenSolution picard_step(const OperatorSpec& spec, const ScalarField& v, const SourceSpec& src,
                           const ScalarField& f, const ScalarField& psi, const FrozenConfig& cfg) {
    const ResidualOperator op(spec, v.grid_handle(), cfg.scheme);
    return picard_step(op, v, src, f, psi, cfg);
}

FixedPointResult fixed_point_solve(const OperatorSpec& spec, const SourceSpec& src, const ScalarField& f,
                                   const ScalarField& psi, const OuterConfig& cfg,
                                   const std::optional<ScalarField>& start) {
    cfg.validate();
    require_conformable(f, psi, "fixed_point_solve");
    if (!(src.delta > 0.0)) throw ConfigError("fixed point solve needs delta > 0", "source.delta");
    const ResidualOperator op(spec, f.grid_handle(), cfg.frozen.scheme);
    const double scale = outer_data_scale(f, psi);
    FixedPointResult res;
    res.tol_outer = cfg.tol_outer.value_or(1e-6 * scale);

    FrozenConfig inner = cfg.frozen;
    ScalarField un;
    if (start) {
        require_conformable(*start, psi, "fixed_point_solve start");
        un = *start;
        copy_boundary(psi, un);
    } else {
        try {
            un = solve_frozen(op, f, psi, inner).u;
        } catch (const Error&) {
            rethrow_annotated("initial frozen solve");
        }
    }
    ScalarField last = un;
    std::vector<double> history;
    bool done = false;
    for (int n = 1; n <= cfg.max_outer && !done; ++n) {
        inner.initial = last;
        FrozenSolution T = picard_step(op, un, src, f, psi, inner);
        ScalarField next = un;
        for (int node : next.grid().interior_nodes()) next[node] = (1.0 - cfg.theta) * un[node] + cfg.theta * T.u[node];

        TraceRow row;
        row.delta = src.delta;
        row.outer_iter = n;
        row.sup_diff = sup_difference(next, un);
        row.lip_diff = lipschitz_seminorm(difference(next, un));
        row.inner_iters = T.report.iters;
        row.residual = T.report.final_residual;
        row.flatness = level_flatness(next, src.delta);
        res.trace.rows.push_back(row);
        history.push_back(row.sup_diff);

        if (!std::isfinite(row.sup_diff) || next.interior_sup_norm() > 1e6 * scale) {
            std::ostringstream msg;
            msg << "fixed-point iterates are unbounded at delta " << src.delta << ", outer iteration " << n
                << " (sup norm " << next.interior_sup_norm() << ")";
            throw DivergenceError(msg.str(), history);
        }
        un = std::move(next);
        last = std::move(T.u);
        res.last_inner = std::move(T.report);
        res.outer_iters = n;
        done = row.sup_diff <= res.tol_outer && row.lip_diff <= res.tol_outer;
    }
    if (!done) {
        std::ostringstream msg;
        msg << "fixed-point iteration did not converge in " << cfg.max_outer << " outer iterations at delta "
            << src.delta << " (last sup diff " << history.back() << ", level flatness "
            << res.trace.rows.back().flatness << ")";
        throw NonConvergenceError(msg.str(), history);
    }
    res.u = std::move(last);
    res.source = mollified_source(res.u, src);
    std::vector<double> r(res.u.grid().interior_count());
    op.residual(res.u, add_interior(res.source, f), r);
    for (double v : r) res.self_residual = std::max(res.self_residual, std::abs(v));
    return res;
}

std::vector<double> delta_schedule(const OuterConfig& cfg, const ScalarField& psi) {
    cfg.validate();
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int node : psi.grid().boundary_nodes()) {
        lo = std::min(lo, psi[node]);
        hi = std::max(hi, psi[node]);
    }
    for (double v : psi.boundary_values()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double d0 = cfg.delta0.value_or(0.1 * (hi - lo + 1.0));
    if (!(d0 > cfg.delta_min)) throw ConfigError("delta0 must exceed delta_min", "source.delta0");
    std::vector<double> out;
    for (double d = d0; d > cfg.delta_min; d *= 0.5) out.push_back(d);
    out.push_back(cfg.delta_min);
    return out;
}

ContinuationResult delta_continuation(const OperatorSpec& spec, const SourceSpec& src, const ScalarField& f,
                                      const ScalarField& psi, const OuterConfig& cfg) {
    const std::vector<double> schedule = delta_schedule(cfg, psi);
    ContinuationResult out;
    std::optional<ScalarField> warm;
    for (double delta : schedule) {
        SourceSpec level = src;
        level.delta = delta;
        FixedPointResult fp = fixed_point_solve(spec, level, f, psi, cfg, warm);
        auto& tr = out.trace;
        tr.rows.insert(tr.rows.end(), fp.trace.rows.begin(), fp.trace.rows.end());
        tr.deltas.push_back(delta);
        if (warm) {
            tr.level_diffs.push_back(sup_difference(fp.u, *warm));
            const std::size_t k = tr.level_diffs.size();
            if (k >= 3 && tr.level_diffs[k - 1] > tr.level_diffs[k - 2]) {
                tr.cauchy_monotone = false;
                char buf[160];
                std::snprintf(buf, sizeof buf, "level difference grew from %.3g to %.3g at delta %.3g",
                              tr.level_diffs[k - 2], tr.level_diffs[k - 1], delta);
                tr.warnings.emplace_back(buf);
            }
        }
        out.delta = delta;
        out.self_residual = fp.self_residual;
        out.tol_outer = fp.tol_outer;
        out.last_inner = fp.last_inner;
        out.source = fp.source;
        out.u = fp.u;
        warm = std::move(fp.u);
        if (!tr.level_diffs.empty() && tr.level_diffs.back() <= fp.tol_outer && delta != schedule.back()) {
            tr.stagnated = true;
            break;
        }
    }
    return out;
}

double RadialProfile::operator()(double radius) const {
    const double x = std::clamp(radius, r.front(), r.back());
    const auto k = std::min<std::size_t>(
        static_cast<std::size_t>(std::upper_bound(r.begin(), r.end(), x) - r.begin()), r.size() - 1);
    const std::size_t i = k == 0 ? 0 : k - 1;
    const double d = r[i + 1] - r[i];
    const double t = (x - r[i]) / d;
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * u[i] + (t3 - 2 * t2 + t) * d * du[i] + (-2 * t3 + 3 * t2) * u[i + 1] +
           (t3 - t2) * d * du[i + 1];
}

double RadialProfile::slope(double radius) const {
    const double x = std::clamp(radius, r.front(), r.back());
    const auto k = std::min<std::size_t>(
        static_cast<std::size_t>(std::upper_bound(r.begin(), r.end(), x) - r.begin()), r.size() - 1);
    const std::size_t i = k == 0 ? 0 : k - 1;
    const double d = r[i + 1] - r[i];
    const double t = (x - r[i]) / d;
    const double t2 = t * t;
    return ((6 * t2 - 6 * t) * u[i] + (3 * t2 - 4 * t + 1) * d * du[i] + (-6 * t2 + 6 * t) * u[i + 1] +
            (3 * t2 - 2 * t) * d * du[i + 1]) /
           d;
}

RadialProfile radial_oracle(const SourceFunction& g, const std::function<double(double)>& f, int n_r) {
    if (n_r < 10000) throw ConfigError("radial oracle needs at least 1e4 panels", "oracle.n_r");
    const double step = 1.0 / n_r;
    auto source = [&](double s) {
        const double v = g(kPi * (1.0 - s * s)) + f(s);
        if (v < 0.0) {
            std::ostringstream msg;
            msg << "radial oracle inapplicable: g + f = " << v << " < 0 at r = " << s;
            throw DiagnosticError(msg.str());
        }
        return v;
    };
    auto q = [&](double s) { return s * source(s); };

    const auto n = static_cast<std::size_t>(n_r);
    RadialProfile p;
    p.r.resize(n + 1);
    p.u.assign(n + 1, 0.0);
    p.du.assign(n + 1, 0.0);
    std::vector<double> mid_du(n);
    // Flux F(r) = int_0^r s S(s) ds at knots and midpoints; u' = F / r.
    double flux = 0.0, q_left = q(0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = static_cast<double>(i) * step;
        const double m = a + 0.5 * step, b = a + step;
        const double q_mid = q(m), q_right = q(b);
        const double flux_mid = flux + step / 12.0 * (q_left + 4.0 * q(a + 0.25 * step) + q_mid);
        mid_du[i] = flux_mid / m;
        flux += step / 6.0 * (q_left + 4.0 * q_mid + q_right);
        p.r[i] = a;
        p.du[i + 1] = flux / b;
        q_left = q_right;
    }
    p.r[n] = 1.0;
    for (std::size_t i = n; i-- > 0;) p.u[i] = p.u[i + 1] - step / 6.0 * (p.du[i] + 4.0 * mid_du[i] + p.du[i + 1]);
    return p;
}

}  // namespace gmsolve
