#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "gmsolve/diagnostics.hpp"
#include "gmsolve/errors.hpp"
#include "gmsolve/frozen_solver.hpp"

using namespace gmsolve;

namespace {

double sinsin(Point p) { return std::sin(kPi * p.x) * std::sin(kPi * p.y); }

// Midpoint quadrature of the three L^4 integrals of sin(pi x) sin(pi y) on (0,1)^2.
double w24_sinsin_oracle() {
    const int m = 1000;
    double iu = 0.0, ig = 0.0, ih = 0.0;
    for (int j = 0; j < m; ++j) {
        const double y = (j + 0.5) / m;
        for (int i = 0; i < m; ++i) {
            const double x = (i + 0.5) / m;
            const double sx = std::sin(kPi * x), sy = std::sin(kPi * y);
            const double cx = std::cos(kPi * x), cy = std::cos(kPi * y);
            const double u = sx * sy;
            const double g2 = kPi * kPi * (cx * cx * sy * sy + sx * sx * cy * cy);
            const double h2 = std::pow(kPi, 4) * (2.0 * u * u + 2.0 * cx * cx * cy * cy);
            iu += std::pow(u, 4);
            ig += g2 * g2;
            ih += h2 * h2;
        }
    }
    const double w = 1.0 / (static_cast<double>(m) * m);
    return std::pow(iu * w, 0.25) + std::pow(ig * w, 0.25) + std::pow(ih * w, 0.25);
}

ScalarField scaled(const ScalarField& v, double c) {
    ScalarField out = v;
    for (double& x : out.values())
        if (std::isfinite(x)) x *= c;
    for (double& x : out.boundary_values()) x *= c;
    return out;
}

// Step along x = 1/2, linear over one cell.
ScalarField smoothed_step(const GridHandle& g) {
    const double h = g->h();
    return sample_field(g, [h](Point p) { return std::clamp((p.x - 0.5) / h, -0.5, 0.5); });
}

}  // namespace

TEST_CASE("Lp norm examples") {
    const GridHandle g = build_grid(Shape::UnitSquare, 65);
    const ScalarField one = sample_field(g, [](Point) { return 1.0; });
    for (double p : {1.0, 2.0, 4.0}) CHECK(lp_norm(one, p) == doctest::Approx(std::pow(g->total_measure(), 1.0 / p)));
    CHECK(lp_norm(ScalarField(g), 2.0) == 0.0);
    for (int n : {33, 65, 129}) {
        const GridHandle gn = build_grid(Shape::UnitSquare, n);
        const double v = lp_norm(sample_field(gn, [](Point p) { return p.x; }), 2.0);
        CHECK(std::abs(v - std::sqrt(1.0 / 3.0)) <= 2.0 * gn->h());
    }
    CHECK_THROWS_AS(lp_norm(one, 0.5), ConfigError);
    const ScalarField x = sample_field(g, [](Point p) { return p.x - 0.3; });
    CHECK(lp_norm(scaled(x, -2.5), 3.0) == doctest::Approx(2.5 * lp_norm(x, 3.0)));
}

TEST_CASE("W2p norm") {
    const GridHandle g = build_grid(Shape::UnitDisk, 33);
    const ScalarField c = sample_field(g, [](Point) { return -3.0; });
    CHECK(w2p_norm(c, 4.0) == doctest::Approx(lp_norm(c, 4.0)).epsilon(1e-9));
    CHECK_THROWS_AS(w2p_norm(c, 2.0), ConfigError);

    const GridHandle sq = build_grid(Shape::UnitSquare, 33);
    const SymMat2 a{2.0, 0.5, -1.0};
    const ScalarField q = sample_field(sq, [&](Point p) { return 0.5 * a.quadratic_form(p); });
    std::vector<double> grad, hess;
    for (int node : sq->interior_nodes()) {
        grad.push_back(a.apply(sq->position(node)).norm());
        hess.push_back(a.frobenius());
    }
    const double expected = lp_norm(q, 4.0) + lp_norm(*sq, grad, 4.0) + lp_norm(*sq, hess, 4.0);
    CHECK(w2p_norm(q, 4.0) == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("W2p of sin sin approaches the quadrature value") {
    const double oracle = w24_sinsin_oracle();
    const GridHandle g = build_grid(Shape::UnitSquare, 129);
    const double v = w2p_norm(sample_field(g, sinsin), 4.0);
    MESSAGE("w2p discrete " << v << " oracle " << oracle);
    CHECK(std::abs(v - oracle) <= 0.05 * oracle);

    // Successive differences shrink under refinement.
    double prev = 0.0, prev_gap = 1e300;
    for (int n : {17, 33, 65, 129}) {
        const double w = w2p_norm(sample_field(build_grid(Shape::UnitSquare, n), sinsin), 4.0);
        if (prev > 0.0) {
            CHECK(std::abs(w - prev) < prev_gap);
            prev_gap = std::abs(w - prev);
        }
        prev = w;
    }
}

TEST_CASE("Lipschitz norm") {
    const GridHandle g = build_grid(Shape::UnitSquare, 33);
    const ScalarField u = sample_field(g, [](Point p) { return 3.0 * p.x - p.y; });
    CHECK(lipschitz_seminorm(u) == doctest::Approx(3.0));
    CHECK(lipschitz_norm(u) == doctest::Approx(3.0 + 3.0));
    CHECK(lipschitz_seminorm(sample_field(g, [](Point) { return 1.0; })) == 0.0);
}

TEST_CASE("p-BMO seminorm") {
    const GridHandle g = build_grid(Shape::UnitSquare, 65);
    SUBCASE("constants vanish") {
        CHECK(pbmo_seminorm(sample_field(g, [](Point) { return 4.0; }), 2.0) == 0.0);
        CHECK(pbmo_hessian(sample_field(g, [](Point) { return 4.0; }), 2.0) == 0.0);
    }
    SUBCASE("affine fields") {
        const ScalarField u = sample_field(g, [](Point p) { return 2.0 * p.x + p.y; });
        CHECK(pbmo_seminorm(u, 2.0) > 0.0);
        CHECK(pbmo_hessian(u, 2.0) <= 1e-9);
    }
    SUBCASE("two-value field") {
        ScalarField u(g);
        for (int node : g->interior_nodes()) u[node] = g->position(node).x < 0.5 ? 0.0 : 1.0;
        CHECK(pbmo_seminorm(u, 1.0) > 0.0);
    }
    SUBCASE("Jensen ordering and scaling") {
        for (const ScalarField& v : {smoothed_step(g), sample_field(g, sinsin)}) {
            const double b1 = pbmo_seminorm(v, 1.0), b2 = pbmo_seminorm(v, 2.0), b4 = pbmo_seminorm(v, 4.0);
            CHECK(b1 > 0.0);
            CHECK(b1 <= b2 * (1.0 + 1e-12));
            CHECK(b2 <= b4 * (1.0 + 1e-12));
            CHECK(pbmo_seminorm(scaled(v, -3.0), 2.0) == doctest::Approx(3.0 * b2).epsilon(1e-12));
            const double c1 = pbmo_seminorm(v, 1.0, {}, BallMode::Clipped);
            CHECK(c1 <= pbmo_seminorm(v, 2.0, {}, BallMode::Clipped) * (1.0 + 1e-12));
        }
    }
    SUBCASE("radii") {
        const auto r = default_radii(*g);
        REQUIRE(!r.empty());
        CHECK(r.front() == doctest::Approx(2.0 * g->h()));
        CHECK(r.back() <= 0.25);
        for (std::size_t k = 1; k < r.size(); ++k) CHECK(r[k] == doctest::Approx(2.0 * r[k - 1]));
    }
    SUBCASE("hessian components carry the Frobenius norm") {
        const ScalarField u = sample_field(g, [](Point p) { return p.x * p.y; });
        const auto c = hessian_components(u);
        REQUIRE(c.size() == 3 * g->interior_count());
        CHECK(c[1] == doctest::Approx(std::sqrt(2.0)));
    }
}

TEST_CASE("Hoelder seminorm of the gradient") {
    const GridHandle g = build_grid(Shape::UnitSquare, 33);
    const ScalarField aff = sample_field(g, [](Point p) { return 1.5 * p.x - 0.25 * p.y + 2.0; });
    CHECK(holder_gradient(aff, 0.5).value <= 1e-9);

    const SymMat2 a{2.0, 1.0, -0.5};
    const ScalarField q = sample_field(g, [&](Point p) { return 0.5 * a.quadratic_form(p); });
    const auto [lo, hi] = a.eigenvalues();
    const double op = std::max(std::abs(lo), std::abs(hi));
    const HolderReport r = holder_gradient(q, 1.0);
    CHECK(r.exhaustive);
    CHECK(std::abs(r.value - op) <= 0.05 * op);
    CHECK(holder_gradient(scaled(q, 2.0), 1.0).value == doctest::Approx(2.0 * r.value));

    const HolderReport s65 = holder_gradient(sample_field(build_grid(Shape::UnitSquare, 65), sinsin), 0.5);
    const HolderReport s129 = holder_gradient(sample_field(build_grid(Shape::UnitSquare, 129), sinsin), 0.5);
    CHECK(s65.exhaustive);
    CHECK_FALSE(s129.exhaustive);
    CHECK(s129.per_seed.size() == 2);
    CHECK(std::isfinite(s129.value));
    CHECK(std::abs(s129.value - s65.value) <= 0.1 * s65.value);
}

TEST_CASE("a priori ratios") {
    SUBCASE("zero data") {
        const GridHandle g = build_grid(Shape::UnitSquare, 33);
        const ScalarField z(g);
        const AprioriRatios r = apriori_ratios(z, z, z, z, 4.0);
        CHECK(r.ratio_w2p == 0.0);
        CHECK(r.ratio_bmo == 0.0);
    }
    SUBCASE("manufactured Poisson problem") {
        double lo = 1e300, hi = 0.0;
        for (int n : {33, 65, 129}) {
            const GridHandle g = build_grid(Shape::UnitSquare, n);
            const ScalarField f = sample_field(g, [](Point p) { return -2.0 * kPi * kPi * sinsin(p); });
            const ScalarField psi = sample_field(g, [](Point) { return 0.0; });
            const FrozenSolution sol = solve_frozen(OperatorSpec::trace(), f, psi);
            const AprioriRatios r = apriori_ratios(sol.u, psi, f, ScalarField(g), 4.0);
            CHECK(std::isfinite(r.ratio_bmo));
            lo = std::min(lo, r.ratio_w2p);
            hi = std::max(hi, r.ratio_w2p);
        }
        CHECK(lo > 0.0);
        CHECK(hi <= 1.25 * lo);
    }
}

TEST_CASE("norm report") {
    const GridHandle g = build_grid(Shape::UnitDisk, 33);
    const ScalarField u = sample_field(g, [](Point p) { return p.x * p.x - p.y + std::cos(p.y); });
    const NormReport r = norm_report(u, 4.0, 0.5);
    for (double v : {r.lp, r.w2p, r.lip, r.holder_grad, r.pbmo_d2, r.pbmo_d2_clipped}) CHECK(v >= 0.0);
    CHECK(r.w2p >= r.lp);
    const auto j = to_json(r);
    for (const char* key : {"lp", "w2p", "lip", "holder_grad", "pbmo_d2"}) CHECK(j.contains(key));
}
