#include "doctest.h"

#include <sstream>
#include <string>

#include "gmsolve/acceptance.hpp"

using namespace gmsolve;

TEST_CASE("cheap criteria pass on a clean build") {
    const SuiteResult r = verify_suite({}, {1, 2, 3, 4, 8, 13});
    REQUIRE(r.criteria.size() == 6);
    for (const auto& c : r.criteria) {
        CAPTURE(c.id);
        CAPTURE(c.detail);
        CHECK(c.passed);
    }
    CHECK(r.passed());
    CHECK(r.failing().empty());
    const auto j = r.to_json();
    CHECK(j.at("passed") == true);
    std::ostringstream table;
    r.write_table(table);
    CHECK(table.str().find("PASS") != std::string::npos);
}

TEST_CASE("an oversized pseudo-time step is reported as divergence") {
    SuiteHooks hooks;
    hooks.tau_scale = 10.0;
    const SuiteResult r = verify_suite(hooks, {5});
    REQUIRE(r.criteria.size() == 1);
    CHECK_FALSE(r.criteria[0].passed);
    CHECK(r.criteria[0].detail.find("diverg") != std::string::npos);
    CHECK(r.failing() == std::vector<int>{5});
}

TEST_CASE("a flipped tie convention fails the source oracle") {
    SuiteHooks hooks;
    hooks.flip_ties = true;
    const SuiteResult r = verify_suite(hooks, {8});
    REQUIRE(r.criteria.size() == 1);
    CHECK_FALSE(r.criteria[0].passed);
    CHECK_FALSE(r.passed());
}
