#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gmsolve/geometry.hpp"
#include "gmsolve/grid.hpp"

namespace gmsolve {

/// Constants (lambda, Lambda, gamma, omega) of the structure condition.
struct Ellipticity {
    double lambda = 1.0;
    double Lambda = 1.0;
    double gamma = 0.0;
    double omega = 0.0;

    /// Throws ConfigError unless 0 < lambda <= Lambda and gamma, omega >= 0.
    void validate() const;
};

/// Pucci extremal operators from the closed-form eigenvalues.
double pucci_minus(const SymMat2& m, double lambda, double Lambda);
double pucci_plus(const SymMat2& m, double lambda, double Lambda);
inline double pucci_minus(const SymMat2& m, const Ellipticity& e) { return pucci_minus(m, e.lambda, e.Lambda); }
inline double pucci_plus(const SymMat2& m, const Ellipticity& e) { return pucci_plus(m, e.lambda, e.Lambda); }

/// Scalar coefficient of x, kept with its source text for serialisation.
struct CoefFn {
    std::string text;
    std::function<double(Point)> fn;

    static CoefFn constant(double v);
    /// Parses an expression; field names the config key in errors.
    static CoefFn parse(std::string_view text, const std::string& field = "coefficient");
    static CoefFn native(std::function<double(Point)> fn, std::string label = "<native>");

    double operator()(Point x) const { return fn(x); }
};

/// Symmetric matrix-valued coefficient A(x).
struct MatrixCoef {
    CoefFn xx, xy, yy;

    static MatrixCoef constant(const SymMat2& a);
    SymMat2 operator()(Point x) const { return {xx(x), xy(x), yy(x)}; }
};

enum class OperatorKind : std::uint8_t {
    Trace,
    LinearVarCoef,
    PucciMinus,
    PucciPlus,
    BellmanConvex,
    AsymptoticallyConvex,
};

std::string_view to_string(OperatorKind kind);
OperatorKind parse_operator_kind(std::string_view text);

/// A member of the closed operator family.
///
/// AsymptoticallyConvex is
///   F = F*(M,x) + kappa * arctan(|M|_F) * rho(x) - c(x) * r + b(x) * |p|
/// with F* one of the convex kinds. Its ellipticity is that of F* widened
/// by kappa on both sides, with gamma >= sup|b| and omega >= sup c.
struct OperatorSpec {
    OperatorKind kind = OperatorKind::Trace;
    Ellipticity ellipticity;

    MatrixCoef A;                    // LinearVarCoef
    std::vector<MatrixCoef> family;  // BellmanConvex

    std::shared_ptr<const OperatorSpec> base;  // F* of AsymptoticallyConvex
    double kappa = 0.0;
    CoefFn rho = CoefFn::constant(0.0);
    CoefFn c = CoefFn::constant(0.0);
    CoefFn b = CoefFn::constant(0.0);

    static OperatorSpec trace();
    static OperatorSpec pucci_minus(double lambda, double Lambda);
    static OperatorSpec pucci_plus(double lambda, double Lambda);
    /// lambda, Lambda are the declared spectral bounds of A(x).
    static OperatorSpec linear(MatrixCoef A, double lambda, double Lambda);
    static OperatorSpec bellman(std::vector<MatrixCoef> family, double lambda, double Lambda);
    static OperatorSpec asymptotically_convex(OperatorSpec base, double kappa, CoefFn rho, CoefFn c, CoefFn b,
                                              double gamma, double omega);

    /// Structural checks that do not need a grid. Throws ConfigError.
    void validate() const;
    /// The convex, positively 1-homogeneous part (F* for the AC kind, itself otherwise).
    const OperatorSpec& recession_part() const;
    bool is_homogeneous() const noexcept { return kind != OperatorKind::AsymptoticallyConvex; }
    bool depends_on_position() const;
    /// kappa * pi / 2, the bound on |F - F*| at zero lower-order arguments.
    double perturbation_bound() const noexcept;
};

/// F(M, p, r, x).
double eval_operator(const OperatorSpec& spec, const SymMat2& m, Vec2 p, double r, Point x);

/// Coefficients of a spec sampled at the interior nodes of one grid, so
/// the solver does not re-evaluate expressions every sweep.
class BoundOperator {
public:
    /// Also checks the coefficient ranges (spectrum of A within the declared
    /// bounds, |rho| <= 1, 0 <= c <= omega, |b| <= gamma) at every node.
    BoundOperator(const OperatorSpec& spec, const GridHandle& grid);

    const OperatorSpec& spec() const noexcept { return spec_; }
    const Ellipticity& ellipticity() const noexcept { return spec_.ellipticity; }

    double eval(int slot, const SymMat2& m, Vec2 p, double r) const;
    /// Coefficients of M in a linear kind: tr(A M) with A returned, else nullopt.
    std::optional<SymMat2> linear_coefficient(int slot) const;

private:
    double convex(int slot, const SymMat2& m) const;

    OperatorSpec spec_;
    OperatorKind convex_kind_ = OperatorKind::Trace;
    Ellipticity convex_ell_;
    int family_size_ = 0;
    std::vector<SymMat2> coef_;  // A per slot, or family_size_ per slot
    std::vector<double> rho_, c_, b_;
};

struct RecessionResult {
    double value = 0.0;
    std::vector<double> trace;
};

/// F_mu(M,0,0,x) = mu F(M/mu, 0, 0, x) along mu_list (positive, decreasing,
/// last entry <= 1e-6). Throws DiagnosticError when two entries differ by
/// more than kappa*pi/2*max(mu, mu').
RecessionResult recession_eval(const OperatorSpec& spec, const SymMat2& m, Point x, const std::vector<double>& mu_list);

/// Value of the exact limit, F*(M, x).
double recession_limit(const OperatorSpec& spec, const SymMat2& m, Point x);

/// Any F(M, p, r, x), for checking operators outside the family.
using OperatorFunction = std::function<double(const SymMat2&, Vec2, double, Point)>;

struct StructureWitness {
    SymMat2 M, N;
    Vec2 p, q;
    double r = 0.0, s = 0.0;
    Point x;
    double margin = 0.0;  // negative: violated by this much
    bool upper = true;    // which inequality
};

struct StructureReport {
    std::size_t samples = 0;
    std::size_t violations = 0;
    double worst_margin = 0.0;
    std::optional<StructureWitness> witness;

    bool ok() const noexcept { return violations == 0; }
    std::string describe() const;
};

/// Random witnesses (entries in [-10, 10], x in the closed domain) for the
/// two-sided structure condition with constants ell. Tolerance 1e-9 times
/// the magnitude of the terms involved.
StructureReport check_structure_condition(const OperatorFunction& F, const Ellipticity& ell, Shape shape,
                                          std::size_t samples, std::uint64_t seed);
StructureReport check_structure_condition(const OperatorSpec& spec, Shape shape, std::size_t samples,
                                          std::uint64_t seed);

struct BetaEstimate {
    double sampled = 0.0;           // lower bound from random matrices
    std::optional<double> exact;    // closed form when the kind admits one

    double value() const noexcept { return exact ? *exact : sampled; }
};

/// Oscillation of F* between x and x0: sup_X |F*(X,x) - F*(X,x0)| / (|X|_F + 1),
/// sampled at the Frobenius norms in scale_list.
BetaEstimate oscillation_beta(const OperatorSpec& spec, Point x, Point x0, std::size_t matrix_samples,
                              const std::vector<double>& scale_list, std::uint64_t seed = 1);

struct SmallnessReport {
    double measured = 0.0;  // (mean of beta^p over B_r(x0))^(1/p)
    double bound = 0.0;     // theta0 * r^alpha0
    std::size_t nodes = 0;
    bool passed = false;
};

/// Throws ConfigError for r outside (0,1), p <= 2, or a ball holding no node.
SmallnessReport check_smallness(const OperatorSpec& spec, const DomainGrid& grid, Point x0, double r, double p,
                                double theta0, double alpha0, std::size_t matrix_samples = 64);

}  // namespace gmsolve
