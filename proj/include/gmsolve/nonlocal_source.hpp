#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "gmsolve/field.hpp"

namespace gmsolve {

/// Interior values sorted ascending with prefix sums of cell measure and
/// of value times measure. Answers level-set measure queries in O(log N).
class DistributionFunction {
public:
    explicit DistributionFunction(const ScalarField& u);

    double total() const noexcept { return prefix_measure_.back(); }
    std::size_t size() const noexcept { return values_.size(); }
    std::span<const double> sorted_values() const noexcept { return values_; }
    std::span<const double> prefix_measure() const noexcept { return prefix_measure_; }
    std::span<const double> prefix_value() const noexcept { return prefix_value_; }

    /// |{u >= t}|
    double superlevel(double t) const noexcept;
    /// |{u > t}|
    double strict_superlevel(double t) const noexcept;
    /// |{t_lo <= u <= t_hi}|
    double band(double t_lo, double t_hi) const noexcept;
    /// (1/delta) * integral over s in [0, delta] of |{u >= v - s}|, exact for
    /// the step function; delta > 0.
    double mollified_superlevel(double v, double delta) const noexcept;

private:
    std::vector<double> values_;
    std::vector<double> prefix_measure_;  // size N+1
    std::vector<double> prefix_value_;    // size N+1
};

DistributionFunction build_distribution(const ScalarField& u);
double superlevel_measure(const DistributionFunction& dist, double t);

/// The continuous function g on [0, |Omega|].
struct SourceFunction {
    enum class Kind { Affine, ExpDecay, Tabulated };

    Kind kind = Kind::Affine;
    double a = 0.0;  // affine: a + b s; exp_decay: a exp(-b s)
    double b = 0.0;
    std::vector<double> s;  // tabulated knots, ascending
    std::vector<double> g;

    static SourceFunction affine(double a, double b);
    static SourceFunction exp_decay(double a, double b);
    static SourceFunction tabulated(std::vector<double> s, std::vector<double> g);
    /// CSV with header `s,g` (any two-column header) and ascending s.
    static SourceFunction from_csv(std::istream& in);
    static SourceFunction load_csv(const std::string& path);

    double operator()(double s) const;
    /// Global Lipschitz constant on [0, upto].
    double lipschitz(double upto) const;
    /// Throws ConfigError unless the table spans [0, upto].
    void check_domain(double upto) const;
    std::string describe() const;
};

struct SourceSpec {
    SourceFunction g;
    double delta = 0.0;
    /// Evaluate g at s * |Omega| / |Omega|_h instead of s.
    bool rescale = false;
    /// Count ties out of the superlevel set (|{u > t}|). Only for testing
    /// that the tie convention is observable.
    bool strict_ties = false;
};

/// g(clamped measure), with the optional rescale to the exact |Omega|.
double apply_g(const SourceSpec& src, const DomainGrid& grid, double measure);

/// G_u(x) = g(|{u >= u(x)}|) at interior nodes.
ScalarField grad_mercier_source(const ScalarField& u, const SourceSpec& src);
/// G_u^delta(x) = g((1/delta) int_0^delta |{u >= u(x) - s}| ds), delta > 0.
ScalarField mollified_source(const ScalarField& u, const SourceSpec& src);
/// Dispatches on src.delta.
ScalarField nonlocal_source(const ScalarField& u, const SourceSpec& src);

/// sup over interior nodes x of |{y : |u(y) - u(x)| <= eps}|.
double level_flatness(const ScalarField& u, double eps);

}  // namespace gmsolve
