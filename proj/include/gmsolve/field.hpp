#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "gmsolve/grid.hpp"

namespace gmsolve {

using PointFunction = std::function<double(Point)>;

/// Real values on the lattice nodes of a grid plus the curved-boundary
/// points. Exterior nodes hold NaN.
class ScalarField {
public:
    ScalarField() = default;
    /// Zero at every node with data, NaN elsewhere.
    explicit ScalarField(GridHandle grid);

    const DomainGrid& grid() const noexcept { return *grid_; }
    const GridHandle& grid_handle() const noexcept { return grid_; }
    bool empty() const noexcept { return !grid_; }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }
    std::span<double> boundary_values() noexcept { return boundary_values_; }
    std::span<const double> boundary_values() const noexcept { return boundary_values_; }

    double operator[](int node) const noexcept { return values_[static_cast<std::size_t>(node)]; }
    double& operator[](int node) noexcept { return values_[static_cast<std::size_t>(node)]; }

    double value(ValueRef ref) const noexcept {
        return is_boundary_ref(ref) ? boundary_values_[static_cast<std::size_t>(boundary_index(ref))]
                                    : values_[static_cast<std::size_t>(ref)];
    }
    double interior(int slot) const noexcept {
        return values_[static_cast<std::size_t>(grid_->interior_nodes()[static_cast<std::size_t>(slot)])];
    }
    double& interior(int slot) noexcept {
        return values_[static_cast<std::size_t>(grid_->interior_nodes()[static_cast<std::size_t>(slot)])];
    }

    /// Same grid object.
    bool conformable(const ScalarField& other) const noexcept { return grid_ && grid_ == other.grid_; }

    /// Values at interior nodes in slot order.
    std::vector<double> interior_values() const;

    /// Max |v| over interior nodes.
    double interior_sup_norm() const;
    /// Max |v| over boundary nodes and boundary points.
    double boundary_sup_norm() const;
    /// Max v over interior nodes.
    double interior_max() const;
    /// Max v over boundary data.
    double boundary_max() const;

    /// Value at a point of the closed domain by bilinear interpolation, if
    /// the enclosing lattice cell has data at all four corners.
    std::optional<double> bilinear(Point p) const;
    /// Boundary value at a point on the boundary curve, linearly
    /// interpolated between neighbouring boundary samples.
    double boundary_interpolate(Point p) const;

private:
    GridHandle grid_;
    std::vector<double> values_;
    std::vector<double> boundary_values_;
};

/// Evaluates fn at every node with data and at every boundary point.
ScalarField sample_field(const GridHandle& grid, const PointFunction& fn);

/// Dirichlet data: psi at boundary nodes and boundary points, interior
/// filled with the mean of the boundary samples.
ScalarField sample_boundary(const GridHandle& grid, const PointFunction& psi);

/// Copies the boundary data of src into dst (same grid).
void copy_boundary(const ScalarField& src, ScalarField& dst);

/// Throws ConfigError unless a and b share a grid.
void require_conformable(const ScalarField& a, const ScalarField& b, const char* what);

}  // namespace gmsolve
