#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

namespace gmsolve {

/// Deliberate faults for checking that the suite notices them.
struct SuiteHooks {
    double tau_scale = 1.0;   // multiplies every pseudo-time step
    bool flip_ties = false;   // count ties out of the superlevel sets
};

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
    nlohmann::json data;
};

struct SuiteResult {
    std::vector<CriterionResult> criteria;

    bool passed() const;
    std::vector<int> failing() const;
    nlohmann::json to_json() const;
    /// One line per criterion.
    void write_table(std::ostream& out) const;
};

inline constexpr int kCriterionCount = 14;

/// Runs the acceptance criteria (all when `only` is empty) on up to
/// `workers` threads; 0 picks the hardware concurrency.
SuiteResult verify_suite(const SuiteHooks& hooks = {}, const std::vector<int>& only = {}, unsigned workers = 0);

}  // namespace gmsolve
