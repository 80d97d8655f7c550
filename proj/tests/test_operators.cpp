#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "gmsolve/errors.hpp"
#include "gmsolve/grid.hpp"
#include "gmsolve/operators.hpp"

using namespace gmsolve;

namespace {

SymMat2 random_matrix(std::mt19937_64& rng, double range = 10.0) {
    std::uniform_real_distribution<double> u(-range, range);
    return {u(rng), u(rng), u(rng)};
}

SymMat2 random_psd(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    const double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
    // (a b; c d)^T (a b; c d)
    return {a * a + c * c, a * b + c * d, b * b + d * d};
}

// A = R diag(l1, l2) R^T with l1, l2 in [lo, hi].
SymMat2 random_spd(std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> l(lo, hi), t(0.0, kPi);
    const double l1 = l(rng), l2 = l(rng), th = t(rng);
    const double c = std::cos(th), s = std::sin(th);
    return {l1 * c * c + l2 * s * s, (l1 - l2) * c * s, l1 * s * s + l2 * c * c};
}

OperatorSpec linear_sine(double eps) {
    auto a = CoefFn::native([eps](Point x) { return 1.0 + eps * std::sin(2.0 * kPi * x.x); });
    return OperatorSpec::linear({a, CoefFn::constant(0.0), a}, 1.0 - eps, 1.0 + eps);
}

OperatorSpec ac_operator() {
    return OperatorSpec::asymptotically_convex(OperatorSpec::trace(), 0.5, CoefFn::parse("cos(3*x)"),
                                               CoefFn::constant(0.5), CoefFn::parse("0.3*sin(y)"), 0.3, 0.5);
}

std::vector<OperatorSpec> all_kinds() {
    std::vector<OperatorSpec> out;
    out.push_back(OperatorSpec::trace());
    out.push_back(OperatorSpec::pucci_minus(1.0, 2.0));
    out.push_back(OperatorSpec::pucci_plus(1.0, 2.0));
    out.push_back(linear_sine(0.2));
    out.push_back(OperatorSpec::bellman(
        {MatrixCoef::constant({1.0, 0.0, 2.0}), MatrixCoef::constant({1.5, 0.4, 1.5}), MatrixCoef::constant({2.0, 0.0, 1.0})},
        1.0, 2.0));
    out.push_back(ac_operator());
    return out;
}

}  // namespace

TEST_CASE("pucci closed forms") {
    CHECK(pucci_minus(SymMat2::identity(), 1.0, 2.0) == 2.0);
    CHECK(pucci_plus(SymMat2::identity(), 1.0, 2.0) == 4.0);
    CHECK(pucci_minus(SymMat2::diag(1.0, -1.0), 1.0, 2.0) == -1.0);
    CHECK(pucci_plus(SymMat2::diag(1.0, -1.0), 1.0, 2.0) == 1.0);
    CHECK(pucci_minus(SymMat2{}, 1.0, 2.0) == 0.0);
    CHECK(pucci_plus(SymMat2{}, 1.0, 2.0) == 0.0);
}

TEST_CASE("pucci duality and extremality") {
    std::mt19937_64 rng(11);
    for (int k = 0; k < 1000; ++k) {
        const SymMat2 m = random_matrix(rng);
        CHECK(pucci_minus(m, 1.0, 3.0) == doctest::Approx(-pucci_plus(-m, 1.0, 3.0)).epsilon(1e-14));
        const SymMat2 a = random_spd(rng, 1.0, 3.0);
        const double t = a.contract(m);
        const double tol = 1e-12 * (1.0 + m.frobenius());
        CHECK(pucci_minus(m, 1.0, 3.0) <= t + tol);
        CHECK(t <= pucci_plus(m, 1.0, 3.0) + tol);
    }
}

TEST_CASE("eval examples") {
    CHECK(eval_operator(OperatorSpec::trace(), SymMat2::diag(2.0, 3.0), {}, 0.0, {0.5, 0.5}) == 5.0);
    CHECK(eval_operator(OperatorSpec::pucci_minus(1.0, 2.0), SymMat2::diag(1.0, -1.0), {3.0, -4.0}, 7.0, {0.1, 0.2}) ==
          -1.0);
    // kappa = 1 sits on the edge of ellipticity; evaluation alone does not validate.
    const OperatorSpec ac = OperatorSpec::asymptotically_convex(OperatorSpec::trace(), 1.0, CoefFn::constant(1.0),
                                                                CoefFn::constant(1.0), CoefFn::constant(0.0), 0.0, 1.0);
    CHECK(eval_operator(ac, SymMat2{}, {}, 2.0, {0.3, 0.3}) == doctest::Approx(-2.0));
    CHECK_THROWS_AS(ac.validate(), ConfigError);
}

TEST_CASE("bellman takes the max over the family") {
    const OperatorSpec b = OperatorSpec::bellman(
        {MatrixCoef::constant({1.0, 0.0, 2.0}), MatrixCoef::constant({2.0, 0.0, 1.0})}, 1.0, 2.0);
    CHECK(eval_operator(b, SymMat2::diag(1.0, 0.0), {}, 0.0, {}) == 2.0);
    CHECK(eval_operator(b, SymMat2::diag(0.0, 1.0), {}, 0.0, {}) == 2.0);
    CHECK(eval_operator(b, SymMat2::diag(-1.0, -1.0), {}, 0.0, {}) == -3.0);
}

TEST_CASE("degenerate ellipticity under PSD increments") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> pos(0.0, 1.0), any(-5.0, 5.0);
    for (const OperatorSpec& spec : all_kinds()) {
        CAPTURE(to_string(spec.kind));
        for (int k = 0; k < 1000; ++k) {
            const SymMat2 m = random_matrix(rng);
            const SymMat2 p = random_psd(rng);
            const Point x{pos(rng), pos(rng)};
            const Vec2 g{any(rng), any(rng)};
            const double r = any(rng);
            const double tol = 1e-12 * (1.0 + m.frobenius() + p.frobenius());
            CHECK(eval_operator(spec, m + p, g, r, x) >= eval_operator(spec, m, g, r, x) - tol);
        }
    }
}

TEST_CASE("non-increasing in r and bounded at zero") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> pos(0.0, 1.0), any(-5.0, 5.0);
    for (const OperatorSpec& spec : all_kinds()) {
        CAPTURE(to_string(spec.kind));
        for (int k = 0; k < 500; ++k) {
            const SymMat2 m = random_matrix(rng);
            const Point x{pos(rng), pos(rng)};
            const Vec2 g{any(rng), any(rng)};
            double r1 = any(rng), r2 = any(rng);
            if (r2 < r1) std::swap(r1, r2);
            CHECK(eval_operator(spec, m, g, r2, x) <= eval_operator(spec, m, g, r1, x) + 1e-12);
            CHECK(std::abs(eval_operator(spec, SymMat2{}, {}, 0.0, x)) <= spec.perturbation_bound() + 1e-15);
        }
    }
}

TEST_CASE("recession of homogeneous kinds is exact") {
    const std::vector<double> mus{1.0, 1e-2, 1e-4, 1e-6};
    std::mt19937_64 rng(8);
    for (const OperatorSpec& spec : all_kinds()) {
        if (!spec.is_homogeneous()) continue;
        CAPTURE(to_string(spec.kind));
        for (int k = 0; k < 50; ++k) {
            const SymMat2 m = random_matrix(rng);
            const Point x{0.3, 0.6};
            const RecessionResult r = recession_eval(spec, m, x, mus);
            const double self = eval_operator(spec, m, {}, 0.0, x);
            for (double v : r.trace) CHECK(v == doctest::Approx(self).epsilon(1e-12));
            CHECK(recession_limit(spec, m, x) == doctest::Approx(self).epsilon(1e-12));
        }
    }
}

TEST_CASE("recession of the asymptotically convex kind") {
    const OperatorSpec ac = OperatorSpec::asymptotically_convex(OperatorSpec::trace(), 1.0, CoefFn::constant(1.0),
                                                                CoefFn::constant(1.0), CoefFn::constant(0.0), 0.0, 1.0);
    const std::vector<double> mus{1.0, 0.1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
    const RecessionResult r = recession_eval(ac, SymMat2::identity(), {0.5, 0.5}, mus);
    for (std::size_t k = 0; k < mus.size(); ++k) CHECK(std::abs(r.trace[k] - 2.0) <= mus[k] * kPi / 2.0 + 1e-12);
    CHECK(r.value == doctest::Approx(2.0).epsilon(1e-5));

    std::mt19937_64 rng(9);
    const OperatorSpec spec = ac_operator();
    for (int k = 0; k < 200; ++k) {
        const SymMat2 m = random_matrix(rng);
        const Point x{0.2, 0.7};
        CHECK(std::abs(eval_operator(spec, m, {}, 0.0, x) - recession_limit(spec, m, x)) <= spec.kappa * kPi / 2.0);
    }
}

TEST_CASE("recession mu list validation") {
    const OperatorSpec t = OperatorSpec::trace();
    CHECK_THROWS_AS(recession_eval(t, SymMat2::identity(), {}, {}), ConfigError);
    CHECK_THROWS_AS(recession_eval(t, SymMat2::identity(), {}, {1.0, 1e-3}), ConfigError);
    CHECK_THROWS_AS(recession_eval(t, SymMat2::identity(), {}, {1e-7, 1.0}), ConfigError);
    CHECK_THROWS_AS(recession_eval(t, SymMat2::identity(), {}, {-1.0, -2.0}), ConfigError);
}

TEST_CASE("structure condition sampler") {
    for (const OperatorSpec& spec : all_kinds()) {
        CAPTURE(to_string(spec.kind));
        const StructureReport rep = check_structure_condition(spec, Shape::UnitSquare, 10000, 3);
        CHECK(rep.ok());
        CHECK(rep.samples == 10000);
    }
    const OperatorFunction squared = [](const SymMat2& m, Vec2, double, Point) { return m.trace() * m.trace(); };
    const StructureReport bad = check_structure_condition(squared, {1.0, 1.0, 0.0, 0.0}, Shape::UnitDisk, 10000, 3);
    CHECK(bad.violations > 0);
    REQUIRE(bad.witness.has_value());
    CHECK(bad.witness->margin < 0.0);
    CHECK(!bad.describe().empty());
}

TEST_CASE("oscillation beta") {
    const double eps = 0.1;
    const OperatorSpec spec = linear_sine(eps);
    const std::vector<double> scales{0.1, 1.0, 10.0, 100.0};
    CHECK(oscillation_beta(spec, {0.3, 0.2}, {0.3, 0.2}, 64, scales).value() == 0.0);
    CHECK(oscillation_beta(OperatorSpec::trace(), {0.3, 0.2}, {0.7, 0.9}, 64, scales).value() == 0.0);
    double prev = -1.0;
    for (double x1 : {0.0, 0.05, 0.1, 0.15, 0.2, 0.25}) {
        const BetaEstimate b = oscillation_beta(spec, {x1, 0.5}, {0.0, 0.5}, 64, scales);
        const double oracle = eps * std::abs(std::sin(2.0 * kPi * x1)) * std::sqrt(2.0);
        REQUIRE(b.exact.has_value());
        CHECK(*b.exact == doctest::Approx(oracle).epsilon(1e-12));
        CHECK(b.sampled <= oracle + 1e-14);
        CHECK(b.sampled >= 0.9 * oracle);
        CHECK(b.value() >= prev);
        CHECK(b.value() <= 2.0 * std::sqrt(2.0) * eps);
        prev = b.value();
    }
}

TEST_CASE("smallness condition") {
    const GridHandle g = build_grid(Shape::UnitSquare, 33);
    const Point x0{0.5, 0.5};
    SUBCASE("trace") {
        const SmallnessReport r = check_smallness(OperatorSpec::trace(), *g, x0, 0.25, 4.0, 1e-6, 1.0);
        CHECK(r.measured == 0.0);
        CHECK(r.passed);
    }
    SUBCASE("small Lipschitz coefficient") {
        const double eps = 0.01;
        const double theta0 = std::sqrt(2.0) * eps * 2.0 * kPi;
        for (double r : {0.1, 0.2, 0.4}) {
            const SmallnessReport rep = check_smallness(linear_sine(eps), *g, x0, r, 4.0, theta0, 1.0);
            CHECK(rep.nodes > 0);
            CHECK(rep.measured > 0.0);
            CHECK(rep.passed);
        }
    }
    SUBCASE("large oscillation fails") {
        auto a = CoefFn::native([](Point x) { return 11.0 + 10.0 * std::sin(2.0 * kPi * x.x); });
        const OperatorSpec spec = OperatorSpec::linear({a, CoefFn::constant(0.0), a}, 1.0, 21.0);
        const SmallnessReport rep = check_smallness(spec, *g, x0, 0.5, 4.0, 0.1, 1.0);
        CHECK_FALSE(rep.passed);
        CHECK(rep.measured > rep.bound);
    }
    SUBCASE("bad arguments") {
        const Point off{0.5 + g->h() / 2.0, 0.5 + g->h() / 2.0};
        CHECK_THROWS_AS(check_smallness(OperatorSpec::trace(), *g, off, g->h() / 4.0, 4.0, 1.0, 1.0), ConfigError);
        CHECK_THROWS_AS(check_smallness(OperatorSpec::trace(), *g, x0, 1.5, 4.0, 1.0, 1.0), ConfigError);
        CHECK_THROWS_AS(check_smallness(OperatorSpec::trace(), *g, x0, 0.2, 2.0, 1.0, 1.0), ConfigError);
    }
}

TEST_CASE("operator validation") {
    CHECK_THROWS_AS((Ellipticity{0.0, 1.0, 0.0, 0.0}.validate()), ConfigError);
    CHECK_THROWS_AS((Ellipticity{2.0, 1.0, 0.0, 0.0}.validate()), ConfigError);
    CHECK_THROWS_AS((Ellipticity{1.0, 1.0, -1.0, 0.0}.validate()), ConfigError);
    CHECK_NOTHROW(ac_operator().validate());
    const auto zero = CoefFn::constant(0.0);
    CHECK_THROWS_AS(OperatorSpec::asymptotically_convex(OperatorSpec::pucci_minus(1.0, 2.0), 0.1, zero, zero, zero, 0.0, 0.0)
                        .validate(),
                    ConfigError);
    CHECK_THROWS_AS(OperatorSpec::asymptotically_convex(OperatorSpec::trace(), -0.1, zero, zero, zero, 0.0, 0.0).validate(),
                    ConfigError);
    CHECK_THROWS_AS(OperatorSpec::bellman({}, 1.0, 2.0).validate(), ConfigError);
    CHECK_THROWS_AS(parse_operator_kind("isaacs"), ConfigError);
    CHECK(parse_operator_kind("pucci_plus") == OperatorKind::PucciPlus);
}

TEST_CASE("bound operator rejects coefficients outside the declared bounds") {
    const GridHandle g = build_grid(Shape::UnitSquare, 17);
    auto a = CoefFn::native([](Point x) { return 1.0 + 0.5 * x.x; });
    CHECK_THROWS_AS(BoundOperator(OperatorSpec::linear({a, CoefFn::constant(0.0), a}, 1.0, 1.2), g), ConfigError);
    CHECK_NOTHROW(BoundOperator(OperatorSpec::linear({a, CoefFn::constant(0.0), a}, 1.0, 1.5), g));
}
