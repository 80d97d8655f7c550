#pragma once

#include <memory>
#include <span>
#include <vector>

#include "gmsolve/field.hpp"
#include "gmsolve/operators.hpp"

namespace gmsolve {

/// Gradient and Hessian per interior slot.
struct DiscreteDerivatives {
    std::vector<Vec2> grad;
    std::vector<SymMat2> hess;
};

/// Central differences at regular nodes, unequal-arm (Shortley-Weller)
/// differences next to the curved boundary. Exact on quadratics.
DiscreteDerivatives derivatives(const ScalarField& u);
void node_derivatives(const ScalarField& u, int slot, Vec2& grad, SymMat2& hess);

/// (u(x+a) - 2u(x) + u(x-a)) / |a|^2 with a = k h (cos theta, sin theta) and
/// bilinear interpolation off the lattice. An arm leaving the domain is cut
/// at the boundary and uses the interpolated boundary value there.
double directional_dd(const ScalarField& u, int node, double theta, double k);

enum class SchemeMode { Eigen, WideStencil };

struct Scheme {
    SchemeMode mode = SchemeMode::Eigen;
    int directions = 16;  // K
    int arm = 0;          // arm length in nodes; 0 picks max(1, K/4)

    static Scheme eigen() { return {}; }
    static Scheme wide(int K, int arm = 0) { return {SchemeMode::WideStencil, K, arm}; }
    int arm_nodes() const noexcept { return arm > 0 ? arm : (directions / 4 > 1 ? directions / 4 : 1); }
};

/// Precomputed directional second differences of the wide-stencil scheme
/// for every interior node of one grid.
class WideStencil {
public:
    WideStencil(const GridHandle& grid, int directions, int arm_nodes);

    int directions() const noexcept { return directions_; }
    /// Smallest and largest directional second difference at a slot.
    std::pair<double, double> extremes(const ScalarField& u, int slot) const;
    /// Coefficient of u(x) in the steepest directional difference (negative).
    double center_weight(int slot) const noexcept { return center_[static_cast<std::size_t>(slot)]; }

private:
    struct Arm {
        InterpWeights plus, minus;
        double len_plus = 0.0, len_minus = 0.0;
    };

    GridHandle grid_;
    int directions_ = 0;
    std::vector<Arm> arms_;  // directions_ per slot
    std::vector<double> center_;
};

/// Residual evaluator bound to one operator, grid and scheme.
class ResidualOperator {
public:
    ResidualOperator(const OperatorSpec& spec, const GridHandle& grid, const Scheme& scheme);

    const BoundOperator& op() const noexcept { return op_; }
    const Ellipticity& ellipticity_of() const noexcept { return op_.ellipticity(); }
    const Scheme& scheme() const noexcept { return scheme_; }
    const DomainGrid& grid() const noexcept { return *grid_; }

    /// F(D2u, Du, u, x) at a slot.
    double apply(const ScalarField& u, int slot) const;
    /// F - rhs at every interior slot.
    void residual(const ScalarField& u, const ScalarField& rhs, std::span<double> out) const;
    /// Magnitude of the coefficient of u(x) in F, scaled by 1/Lambda; equals
    /// 4/h^2 at a regular node of the five-point Laplacian.
    double diagonal_scale(int slot) const noexcept;

private:
    GridHandle grid_;
    BoundOperator op_;
    Scheme scheme_;
    std::unique_ptr<WideStencil> wide_;
    bool trace_fast_ = false;
};

/// R = F(D2_h u, D_h u, u, x) - rhs at interior nodes; zero elsewhere.
ScalarField assemble_residual(const OperatorSpec& spec, const ScalarField& u, const ScalarField& rhs,
                              const Scheme& scheme = {});

}  // namespace gmsolve
