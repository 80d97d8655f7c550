#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "gmsolve/diagnostics.hpp"
#include "gmsolve/driver.hpp"
#include "gmsolve/errors.hpp"

using namespace gmsolve;

namespace {

double sup_diff(const ScalarField& a, const ScalarField& b) {
    double d = 0.0;
    for (int node : a.grid().interior_nodes()) d = std::max(d, std::abs(a[node] - b[node]));
    return d;
}

SourceSpec source(SourceFunction g, double delta) {
    SourceSpec s;
    s.g = std::move(g);
    s.delta = delta;
    return s;
}

struct Problem {
    GridHandle grid;
    ScalarField f, psi;
};

Problem square_problem(int n, double fval) {
    const GridHandle g = build_grid(Shape::UnitSquare, n);
    return {g, sample_field(g, [fval](Point) { return fval; }), sample_boundary(g, [](Point) { return 0.0; })};
}

}  // namespace

TEST_CASE("radial oracle closed forms") {
    const auto one = [](double) { return 1.0; };
    SUBCASE("pure f") {
        const RadialProfile p = radial_oracle(SourceFunction::affine(0.0, 0.0), [](double) { return 4.0; });
        for (double r = 0.0; r <= 1.0; r += 0.05) {
            CHECK(p(r) == doctest::Approx(r * r - 1.0).epsilon(1e-12));
            CHECK(p.slope(r) == doctest::Approx(2.0 * r).epsilon(1e-10));
        }
    }
    SUBCASE("constant g acts like f") {
        const RadialProfile p = radial_oracle(SourceFunction::affine(2.0, 0.0), [](double) { return 2.0; });
        for (double r = 0.0; r <= 1.0; r += 0.05) CHECK(p(r) == doctest::Approx(r * r - 1.0).epsilon(1e-12));
    }
    SUBCASE("g = s") {
        const RadialProfile p = radial_oracle(SourceFunction::affine(0.0, 1.0), one);
        for (double r = 0.0; r <= 1.0; r += 0.01) {
            const double exact = (1.0 + kPi) * (r * r - 1.0) / 4.0 - kPi * (std::pow(r, 4) - 1.0) / 16.0;
            const double slope = r * (1.0 + kPi) / 2.0 - kPi * r * r * r / 4.0;
            CHECK(std::abs(p(r) - exact) <= 1e-10);
            CHECK(std::abs(p.slope(r) - slope) <= 1e-10);
        }
    }
    SUBCASE("preconditions") {
        CHECK_THROWS_AS(radial_oracle(SourceFunction::affine(0.0, 1.0), one, 5000), ConfigError);
        CHECK_THROWS_AS(radial_oracle(SourceFunction::affine(-5.0, 0.0), one), DiagnosticError);
    }
}

TEST_CASE("zero g decouples") {
    const Problem p = square_problem(17, -3.0);
    const SourceSpec src = source(SourceFunction::affine(0.0, 0.0), 0.01);
    OuterConfig cfg;
    const FixedPointResult fp = fixed_point_solve(OperatorSpec::trace(), src, p.f, p.psi, cfg);
    CHECK(fp.outer_iters == 1);
    const FrozenSolution frozen = solve_frozen(OperatorSpec::trace(), p.f, p.psi);
    CHECK(sup_diff(fp.u, frozen.u) <= 10.0 * frozen.report.tol_residual);

    const FrozenSolution t1 = picard_step(OperatorSpec::trace(), frozen.u, src, p.f, p.psi);
    const FrozenSolution t2 = picard_step(OperatorSpec::trace(), ScalarField(p.grid), src, p.f, p.psi);
    CHECK(sup_diff(t1.u, t2.u) <= 10.0 * t1.report.tol_residual);

    cfg.delta0 = 0.1;
    cfg.delta_min = 0.01;
    const ContinuationResult c = delta_continuation(OperatorSpec::trace(), src, p.f, p.psi, cfg);
    for (double d : c.trace.level_diffs) CHECK(d <= 10.0 * frozen.report.tol_residual);
}

TEST_CASE("zero is a fixed point for balanced data") {
    const GridHandle g = build_grid(Shape::UnitDisk, 17);
    const SourceSpec src = source(SourceFunction::affine(2.0, 0.0), 0.05);
    const ScalarField f = sample_field(g, [](Point) { return -2.0; });
    const ScalarField psi = sample_boundary(g, [](Point) { return 0.0; });
    const FrozenSolution t = picard_step(OperatorSpec::trace(), ScalarField(g), src, f, psi);
    CHECK(t.u.interior_sup_norm() <= 1e-12);
}

TEST_CASE("contractive g decays geometrically") {
    const Problem p = square_problem(33, -4.0);
    const SourceSpec src = source(SourceFunction::affine(0.0, 0.5), 0.05);
    OuterConfig cfg;
    const FixedPointResult fp = fixed_point_solve(OperatorSpec::trace(), src, p.f, p.psi, cfg);
    const auto& rows = fp.trace.rows;
    REQUIRE(rows.size() >= 3);
    for (std::size_t k = 1; k + 1 < rows.size(); ++k) {
        if (rows[k].sup_diff <= 100.0 * fp.tol_outer) break;  // below this the inner tolerance dominates
        CHECK(rows[k].sup_diff / rows[k - 1].sup_diff < 1.0);
    }
    const double lip_g = src.g.lipschitz(p.grid->total_measure());
    const double bound = 10.0 * (fp.last_inner.tol_residual + lip_g * p.grid->total_measure() * fp.tol_outer);
    CHECK(fp.self_residual <= bound);

    cfg.max_outer = 1;
    CHECK_THROWS_AS(fixed_point_solve(OperatorSpec::trace(), src, p.f, p.psi, cfg), NonConvergenceError);
}

TEST_CASE("fixed points do not depend on the relaxation weight") {
    const Problem p = square_problem(17, -4.0);
    const SourceSpec src = source(SourceFunction::exp_decay(2.0, 1.0), 0.05);
    std::vector<ScalarField> sols;
    double tol = 0.0;
    for (double theta : {0.25, 0.5, 1.0}) {
        OuterConfig cfg;
        cfg.theta = theta;
        const FixedPointResult fp = fixed_point_solve(OperatorSpec::trace(), src, p.f, p.psi, cfg);
        tol = fp.tol_outer;
        sols.push_back(fp.u);
    }
    CHECK(sup_diff(sols[0], sols[1]) <= 10.0 * tol);
    CHECK(sup_diff(sols[1], sols[2]) <= 10.0 * tol);
}

TEST_CASE("radial data keeps the solution radial") {
    const GridHandle g = build_grid(Shape::UnitDisk, 33);
    const SourceSpec src = source(SourceFunction::affine(1.0, 1.0 / kPi), 0.01);
    const ScalarField f = sample_field(g, [](Point) { return 1.0; });
    const ScalarField psi = sample_boundary(g, [](Point) { return 0.0; });
    OuterConfig cfg;
    const FixedPointResult fp = fixed_point_solve(OperatorSpec::trace(), src, f, psi, cfg);
    // Nodes with the same integer |i|^2 + |j|^2 lie on one circle.
    std::map<long, std::pair<double, double>> range;
    const int c = (g->side() - 1) / 2;
    for (int node : g->interior_nodes()) {
        const long di = g->column(node) - c, dj = g->row(node) - c;
        auto [it, fresh] = range.try_emplace(di * di + dj * dj, fp.u[node], fp.u[node]);
        it->second.first = std::min(it->second.first, fp.u[node]);
        it->second.second = std::max(it->second.second, fp.u[node]);
    }
    double osc = 0.0;
    for (const auto& [r2, mm] : range) osc = std::max(osc, mm.second - mm.first);
    const double h = g->h();
    CHECK(osc <= 10.0 * (h * h + fp.tol_outer) * fp.u.interior_sup_norm());

    const RadialProfile oracle = radial_oracle(src.g, [](double) { return 1.0; });
    double err = 0.0;
    for (int node : g->interior_nodes()) err = std::max(err, std::abs(fp.u[node] - oracle(g->position(node).norm())));
    CHECK(err <= 2.0 * (h * h + src.delta));
}

TEST_CASE("delta schedule") {
    const GridHandle g = build_grid(Shape::UnitSquare, 9);
    const ScalarField psi = sample_boundary(g, [](Point p) { return 2.0 * p.x; });
    OuterConfig cfg;
    cfg.delta_min = 0.01;
    const std::vector<double> s = delta_schedule(cfg, psi);
    REQUIRE(s.size() == 6);
    CHECK(s.front() == doctest::Approx(0.3));
    CHECK(s[4] == doctest::Approx(0.3 / 16.0));
    CHECK(s.back() == 0.01);
    for (std::size_t k = 1; k < s.size(); ++k) CHECK(s[k] < s[k - 1]);

    cfg.delta0 = 0.005;
    CHECK_THROWS_AS(delta_schedule(cfg, psi), ConfigError);
    cfg.delta0.reset();
    cfg.theta = 0.0;
    CHECK_THROWS_AS(delta_schedule(cfg, psi), ConfigError);
}

TEST_CASE("continuation trace") {
    const Problem p = square_problem(17, -4.0);
    const SourceSpec src = source(SourceFunction::affine(0.0, 0.5), 0.0);
    OuterConfig cfg;
    cfg.delta0 = 0.2;
    cfg.delta_min = 0.025;
    const ContinuationResult c = delta_continuation(OperatorSpec::trace(), src, p.f, p.psi, cfg);
    CHECK(c.delta == doctest::Approx(c.trace.deltas.back()));
    for (std::size_t k = 1; k < c.trace.rows.size(); ++k) {
        const auto& a = c.trace.rows[k - 1];
        const auto& b = c.trace.rows[k];
        CHECK((b.delta < a.delta || (b.delta == a.delta && b.outer_iter == a.outer_iter + 1)));
    }
    CHECK(c.trace.cauchy_monotone);
    std::ostringstream out;
    c.trace.write_csv(out);
    CHECK(out.str().rfind("delta,outer_iter,sup_diff,lip_diff,inner_iters,residual,flatness\n", 0) == 0);
    const auto j = c.trace.to_json();
    CHECK(j.at("outer_iterations") == c.trace.rows.size());
    CHECK(j.at("deltas").size() == c.trace.deltas.size());
}
