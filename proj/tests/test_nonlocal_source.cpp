#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "gmsolve/errors.hpp"
#include "gmsolve/nonlocal_source.hpp"

using namespace gmsolve;

namespace {

SourceSpec identity_g(double delta = 0.0) {
    SourceSpec s;
    s.g = SourceFunction::affine(0.0, 1.0);
    s.delta = delta;
    return s;
}

// Brute-force |{u >= t}| by a linear scan.
double scan_superlevel(const ScalarField& u, double t) {
    const auto nodes = u.grid().interior_nodes();
    const auto w = u.grid().cell_measures();
    double m = 0.0;
    for (std::size_t k = 0; k < nodes.size(); ++k)
        if (u[nodes[k]] >= t) m += w[k];
    return m;
}

// Midpoint rule over `panels` panels of (1/delta) int_0^delta |{u >= v - s}| ds.
double riemann_inner(const ScalarField& u, double v, double delta, int panels) {
    const auto nodes = u.grid().interior_nodes();
    const auto w = u.grid().cell_measures();
    std::vector<std::pair<double, double>> sorted;
    for (std::size_t k = 0; k < nodes.size(); ++k) sorted.emplace_back(u[nodes[k]], w[k]);
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> tail(sorted.size() + 1, 0.0);
    for (std::size_t k = sorted.size(); k-- > 0;) tail[k] = tail[k + 1] + sorted[k].second;
    double sum = 0.0;
    const double ds = delta / panels;
    for (int i = 0; i < panels; ++i) {
        const double t = v - (i + 0.5) * ds;
        const auto k = std::lower_bound(sorted.begin(), sorted.end(), std::pair{t, -1.0}) - sorted.begin();
        sum += tail[static_cast<std::size_t>(k)];
    }
    return sum / panels;
}

ScalarField two_blocks(const GridHandle& g) {
    ScalarField u(g);
    for (int node : g->interior_nodes()) u[node] = (g->column(node) + g->row(node)) % 2 == 0 ? 1.0 : 0.0;
    return u;
}

}  // namespace

TEST_CASE("distribution of a constant field") {
    const GridHandle g = build_grid(Shape::UnitDisk, 17);
    const ScalarField u = sample_field(g, [](Point) { return 3.0; });
    const DistributionFunction d = build_distribution(u);
    CHECK(superlevel_measure(d, 2.0) == d.total());
    CHECK(superlevel_measure(d, 3.0) == d.total());
    CHECK(superlevel_measure(d, 3.0 + 1e-12) == 0.0);
    CHECK(d.total() == doctest::Approx(g->total_measure()).epsilon(1e-14));
    CHECK(superlevel_measure(d, -1e300) == d.total());
    CHECK(superlevel_measure(d, 1e300) == 0.0);
}

TEST_CASE("distribution of the linear field") {
    const GridHandle g = build_grid(Shape::UnitSquare, 65);
    const ScalarField u = sample_field(g, [](Point p) { return p.x; });
    const DistributionFunction d(u);
    const double total = d.total(), h = g->h();
    for (double t = -0.05; t <= 1.05; t += 0.0137) {
        const double exact = std::clamp(1.0 - t, 0.0, 1.0) * total;
        CHECK(std::abs(d.superlevel(t) - exact) <= h * total);
    }
}

TEST_CASE("tie convention") {
    const GridHandle g = build_grid(Shape::UnitSquare, 17);
    const ScalarField u = two_blocks(g);
    const DistributionFunction d(u);
    CHECK(d.superlevel(0.5) == doctest::Approx(scan_superlevel(u, 0.5)));
    CHECK(d.superlevel(1.0) == doctest::Approx(scan_superlevel(u, 1.0)));
    CHECK(d.superlevel(1.0) > 0.0);
    CHECK(d.strict_superlevel(1.0) == 0.0);
    CHECK(d.superlevel(0.0) == d.total());
    CHECK(d.strict_superlevel(0.0) == doctest::Approx(d.superlevel(1.0)));
    CHECK(d.band(0.0, 1.0) == doctest::Approx(d.total()));
    CHECK(d.band(1.0, 0.0) == 0.0);
}

TEST_CASE("interleaved blocks of equal measure") {
    // n = 18 gives a 16 x 16 interior, so the checkerboard splits evenly.
    const GridHandle g = build_grid(Shape::UnitSquare, 18);
    const DistributionFunction d(two_blocks(g));
    CHECK(d.superlevel(0.5) == doctest::Approx(d.total() / 2.0).epsilon(1e-14));
}

TEST_CASE("monotone coupling and agreement with a scan") {
    std::mt19937_64 rng(3);
    const GridHandle g = build_grid(Shape::UnitDisk, 33);
    std::uniform_real_distribution<double> v(-1.0, 1.0);
    ScalarField u(g);
    for (int node : g->interior_nodes()) u[node] = std::round(v(rng) * 20.0) / 20.0;
    const DistributionFunction d(u);
    std::uniform_real_distribution<double> t(-1.2, 1.2);
    for (int k = 0; k < 1000; ++k) {
        double t1 = t(rng), t2 = t(rng);
        if (k % 3 == 0) t1 = std::round(t1 * 20.0) / 20.0;
        if (t2 < t1) std::swap(t1, t2);
        CHECK(d.superlevel(t1) >= d.superlevel(t2));
        CHECK(d.superlevel(t1) == doctest::Approx(scan_superlevel(u, t1)).epsilon(1e-12));
    }
}

TEST_CASE("grad-mercier source examples") {
    const GridHandle g = build_grid(Shape::UnitSquare, 65);
    SUBCASE("constant field") {
        SourceSpec src;
        src.g = SourceFunction::exp_decay(2.0, 0.5);
        const ScalarField G = grad_mercier_source(sample_field(g, [](Point) { return 1.0; }), src);
        for (int node : g->interior_nodes()) CHECK(G[node] == doctest::Approx(2.0 * std::exp(-0.5 * g->total_measure())));
    }
    SUBCASE("linear field with identity g") {
        const ScalarField G = grad_mercier_source(sample_field(g, [](Point p) { return p.x; }), identity_g());
        const double total = g->total_measure();
        for (int node : g->interior_nodes())
            CHECK(std::abs(G[node] - (1.0 - g->position(node).x) * total) <= g->h() * total);
    }
    SUBCASE("constant g") {
        SourceSpec src;
        src.g = SourceFunction::affine(1.0, 0.0);
        const ScalarField G = grad_mercier_source(sample_field(g, [](Point p) { return p.x * p.y; }), src);
        for (int node : g->interior_nodes()) CHECK(G[node] == 1.0);
    }
}

TEST_CASE("rearrangement invariance") {
    const GridHandle g = build_grid(Shape::UnitSquare, 33);
    const ScalarField u = sample_field(g, [](Point p) { return std::sin(5.0 * p.x) * p.y; });
    std::vector<double> vals = u.interior_values();
    std::mt19937_64 rng(4);
    std::shuffle(vals.begin(), vals.end(), rng);
    ScalarField v(g);
    for (std::size_t s = 0; s < vals.size(); ++s) v.interior(static_cast<int>(s)) = vals[s];
    for (double delta : {0.0, 0.05}) {
        SourceSpec src;
        src.g = SourceFunction::exp_decay(1.0, 2.0);
        src.delta = delta;
        std::vector<double> a = nonlocal_source(u, src).interior_values();
        std::vector<double> b = nonlocal_source(v, src).interior_values();
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-13));
    }
}

TEST_CASE("mollified source of a constant field") {
    const GridHandle g = build_grid(Shape::UnitDisk, 17);
    const ScalarField u = sample_field(g, [](Point) { return -2.0; });
    for (double delta : {1e-3, 0.1, 10.0}) {
        const ScalarField G = mollified_source(u, identity_g(delta));
        for (int node : g->interior_nodes()) CHECK(G[node] == doctest::Approx(g->total_measure()).epsilon(1e-14));
    }
}

TEST_CASE("delta consistency on the linear field") {
    const GridHandle g = build_grid(Shape::UnitSquare, 129);
    const ScalarField u = sample_field(g, [](Point p) { return p.x; });
    const ScalarField G0 = grad_mercier_source(u, identity_g());
    const double total = g->total_measure(), h = g->h();
    double prev = 1e300;
    for (double delta : {0.2, 0.1, 0.05, 0.025}) {
        const ScalarField G = mollified_source(u, identity_g(delta));
        double gap = 0.0;
        for (int node : g->interior_nodes()) {
            const double x = g->position(node).x;
            if (x < delta + 2.0 * h) continue;  // band below the minimum is cut off
            // Inner average gains delta/2 * |Omega|_h, up to one lattice column.
            CHECK(std::abs(G[node] - G0[node] - delta / 2.0 * total) <= 2.0 * h * total);
            gap = std::max(gap, std::abs(G[node] - G0[node]));
        }
        CHECK(gap <= delta / 2.0 * total * 1.0 + 2.0 * h * total);
        CHECK(gap < prev);
        prev = gap;
    }
}

TEST_CASE("two-block field") {
    const GridHandle g = build_grid(Shape::UnitSquare, 18);
    const ScalarField u = two_blocks(g);
    const DistributionFunction d(u);
    // Upper-block node: the band (0.5, 1] holds no value below 1.
    CHECK(d.mollified_superlevel(1.0, 0.5) == doctest::Approx(d.total() / 2.0).epsilon(1e-14));
    CHECK(d.mollified_superlevel(1.0, 0.5) == doctest::Approx(riemann_inner(u, 1.0, 0.5, 1000000)).epsilon(1e-9));
    // A band reaching 0 picks up the lower block for part of its width.
    CHECK(d.mollified_superlevel(1.0, 2.0) == doctest::Approx(riemann_inner(u, 1.0, 2.0, 1000000)).epsilon(1e-9));
    CHECK(d.mollified_superlevel(1.0, 2.0) == doctest::Approx(d.total() * 0.75).epsilon(1e-14));
}

TEST_CASE("exact inner integral matches a Riemann sum on random fields") {
    std::mt19937_64 rng(21);
    const GridHandle g = build_grid(Shape::UnitDisk, 17);
    const double delta = 0.2;
    // Values on multiples of delta/1000 put every breakpoint on a panel edge.
    const double step = delta / 1000.0;
    std::uniform_int_distribution<int> level(0, 5000);
    for (int f = 0; f < 20; ++f) {
        ScalarField u(g);
        for (int node : g->interior_nodes()) u[node] = level(rng) * step;
        const DistributionFunction d(u);
        for (int probe = 0; probe < 3; ++probe) {
            const int node = g->interior_nodes()[static_cast<std::size_t>(level(rng)) % g->interior_count()];
            const double v = u[node];
            CHECK(d.mollified_superlevel(v, delta) ==
                  doctest::Approx(riemann_inner(u, v, delta, 1000000)).epsilon(1e-9));
        }
    }
}

TEST_CASE("level flatness") {
    SUBCASE("linear field") {
        const GridHandle g = build_grid(Shape::UnitSquare, 129);
        const double f = level_flatness(sample_field(g, [](Point p) { return p.x; }), 0.01);
        CHECK(std::abs(f - 0.02 * g->total_measure()) <= 2.0 * g->h() * g->total_measure());
    }
    SUBCASE("flat and checkerboard") {
        const GridHandle g = build_grid(Shape::UnitSquare, 18);
        CHECK(level_flatness(sample_field(g, [](Point) { return 1.0; }), 0.1) == doctest::Approx(g->total_measure()));
        CHECK(level_flatness(two_blocks(g), 0.5) == doctest::Approx(g->total_measure() / 2.0));
        CHECK_THROWS_AS(level_flatness(two_blocks(g), 0.0), ConfigError);
    }
}

TEST_CASE("source functions") {
    CHECK(SourceFunction::affine(1.0, 2.0)(3.0) == 7.0);
    CHECK(SourceFunction::exp_decay(2.0, 1.0)(0.0) == 2.0);
    CHECK(SourceFunction::affine(1.0, -2.0).lipschitz(1.0) == 2.0);
    CHECK(SourceFunction::exp_decay(3.0, 2.0).lipschitz(1.0) == 6.0);

    std::istringstream csv("s,g\n0,1\n1,3\n2,2\n");
    const SourceFunction t = SourceFunction::from_csv(csv);
    CHECK(t(0.5) == doctest::Approx(2.0));
    CHECK(t(1.5) == doctest::Approx(2.5));
    CHECK(t(-1.0) == 1.0);
    CHECK(t(5.0) == 2.0);
    CHECK(t.lipschitz(2.0) == 2.0);
    CHECK_NOTHROW(t.check_domain(2.0));
    CHECK_THROWS_AS(t.check_domain(kPi), ConfigError);

    std::istringstream decreasing("0,1\n1,2\n0.5,3\n");
    CHECK_THROWS_AS(SourceFunction::from_csv(decreasing), ConfigError);
    std::istringstream garbage("s,g\n0,1\nx,y\n");
    CHECK_THROWS_AS(SourceFunction::from_csv(garbage), ConfigError);
    CHECK_THROWS_AS(SourceFunction::load_csv("/nonexistent/table.csv"), ConfigError);
}

TEST_CASE("measure clamping and rescale") {
    const GridHandle g = build_grid(Shape::UnitDisk, 33);
    SourceSpec src = identity_g();
    CHECK(apply_g(src, *g, -1.0) == 0.0);
    CHECK(apply_g(src, *g, 100.0) == g->total_measure());
    src.rescale = true;
    CHECK(apply_g(src, *g, g->total_measure()) == doctest::Approx(kPi));
}

TEST_CASE("mollified source needs a positive width") {
    const GridHandle g = build_grid(Shape::UnitSquare, 9);
    const ScalarField u(g);
    CHECK_THROWS_AS(mollified_source(u, identity_g(0.0)), ConfigError);
    CHECK_THROWS_AS(mollified_source(u, identity_g(-1.0)), ConfigError);
}
