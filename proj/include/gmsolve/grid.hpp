#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "gmsolve/geometry.hpp"

namespace gmsolve {

enum class Shape { UnitSquare, UnitDisk };

enum class NodeClass : std::uint8_t { Interior, Boundary, Exterior };

std::string_view to_string(Shape shape);
std::string_view to_string(NodeClass cls);
/// Accepts "square"/"unit_square" and "disk"/"unit_disk".
Shape parse_shape(std::string_view text);
/// |Omega| in closed form.
double exact_measure(Shape shape);

enum Direction : int { East = 0, West = 1, North = 2, South = 3 };

/// Reference to a stored value: a lattice node when >= 0, otherwise the
/// boundary point with index -1 - ref.
using ValueRef = int;
constexpr ValueRef boundary_ref(int k) { return -1 - k; }
constexpr bool is_boundary_ref(ValueRef r) { return r < 0; }
constexpr int boundary_index(ValueRef r) { return -1 - r; }

/// Axis arm of an interior node: where the neighbouring value lives and how
/// far away it is. Arms shorter than h end on the curved boundary.
struct Arm {
    ValueRef target = 0;
    double length = 0.0;
};

/// Finite-difference weights for one non-standard interior node.
struct DerivativeStencil {
    int count = 0;
    std::array<ValueRef, 9> refs{};
    std::array<double, 9> dx{};
    std::array<double, 9> dy{};
    std::array<double, 9> dxx{};
    std::array<double, 9> dyy{};
    std::array<double, 9> dxy{};
};

/// A boundary datum positioned along the boundary curve (angle on the disk,
/// perimeter arc length on the square).
struct BoundarySample {
    double param = 0.0;
    ValueRef ref = 0;
};

/// Linear combination of at most four stored values.
struct InterpWeights {
    int count = 0;
    std::array<ValueRef, 4> refs{};
    std::array<double, 4> weights{};
};

class DomainGrid;
using GridHandle = std::shared_ptr<const DomainGrid>;

/// Uniform lattice discretisation of the unit square (0,1)^2 or the unit disk.
///
/// The spacing is h = 1/(n-1) for both shapes, so the square lattice has n
/// nodes per axis and the disk lattice covering [-1,1]^2 has 2n-1. Nodes
/// are stored row-major (x fastest). On the disk, interior nodes whose axis
/// neighbour lies outside get a Shortley-Weller arm ending on the circle.
class DomainGrid {
public:
    Shape shape() const noexcept { return shape_; }
    int n() const noexcept { return n_; }
    double h() const noexcept { return h_; }
    /// Lattice nodes per axis.
    int side() const noexcept { return side_; }
    std::size_t node_count() const noexcept { return classes_.size(); }

    int node_index(int i, int j) const noexcept { return j * side_ + i; }
    int column(int node) const noexcept { return node % side_; }
    int row(int node) const noexcept { return node / side_; }
    Point position(int node) const noexcept;
    Point lattice_point(int i, int j) const noexcept;

    NodeClass node_class(int node) const noexcept { return classes_[static_cast<std::size_t>(node)]; }
    bool has_data(int node) const noexcept { return node_class(node) != NodeClass::Exterior; }

    std::span<const int> interior_nodes() const noexcept { return interior_; }
    std::size_t interior_count() const noexcept { return interior_.size(); }
    /// Interior slot of a lattice node, or -1.
    int interior_slot(int node) const noexcept { return slot_of_[static_cast<std::size_t>(node)]; }
    std::span<const int> boundary_nodes() const noexcept { return boundary_nodes_; }

    std::span<const double> cell_measures() const noexcept { return cell_measure_; }
    double total_measure() const noexcept { return total_measure_; }
    double diameter() const noexcept;

    const Arm& arm(int slot, Direction dir) const noexcept {
        return arms_[static_cast<std::size_t>(slot)][static_cast<std::size_t>(dir)];
    }
    /// Lattice index of a diagonal neighbour with data, or -1.
    int diagonal(int slot, int sx, int sy) const noexcept;

    /// True when the five-point and four diagonal neighbours are lattice
    /// nodes at distance h, so the textbook formulas apply.
    bool regular(int slot) const noexcept { return irregular_index_[static_cast<std::size_t>(slot)] < 0; }
    /// Weights for a node that is not regular.
    const DerivativeStencil& stencil(int slot) const noexcept {
        return stencils_[static_cast<std::size_t>(irregular_index_[static_cast<std::size_t>(slot)])];
    }
    std::size_t irregular_count() const noexcept { return stencils_.size(); }

    /// Curved-boundary intersection points (disk only).
    std::span<const Point> boundary_points() const noexcept { return boundary_points_; }
    /// All boundary data (boundary lattice nodes and boundary points) sorted by curve parameter.
    std::span<const BoundarySample> boundary_samples() const noexcept { return boundary_samples_; }
    Point value_position(ValueRef ref) const noexcept;

    /// Curve parameter of a point on the boundary.
    double boundary_param(Point p) const noexcept;
    double boundary_period() const noexcept;

    /// Closed-domain membership test.
    bool contains(Point p) const noexcept;
    /// Distance from p to the boundary along direction dir (unit) starting inside.
    double exit_distance(Point p, Vec2 dir) const noexcept;
    /// Whether the lattice cell with lower-left corner (ci, cj) has data at all four corners.
    bool cell_valid(int ci, int cj) const noexcept;

    /// Bilinear weights for a point of the closed domain, if its lattice
    /// cell has data at all four corners.
    std::optional<InterpWeights> bilinear_weights(Point p) const noexcept;
    /// Weights for a point on the boundary curve: linear interpolation
    /// between the two neighbouring boundary samples.
    InterpWeights boundary_weights(Point p) const noexcept;

private:
    friend GridHandle build_grid(Shape shape, int n);
    DomainGrid() = default;

    void classify();
    void build_arms();
    void build_measures();
    void build_stencils();
    void build_boundary_samples();

    Shape shape_ = Shape::UnitSquare;
    int n_ = 0;
    int side_ = 0;
    int radius_ = 0;  // disk radius in lattice units
    double h_ = 0.0;
    double origin_ = 0.0;

    std::vector<NodeClass> classes_;
    std::vector<int> interior_;
    std::vector<int> slot_of_;
    std::vector<int> boundary_nodes_;
    std::vector<double> cell_measure_;
    double total_measure_ = 0.0;
    std::vector<std::array<Arm, 4>> arms_;
    std::vector<int> irregular_index_;
    std::vector<DerivativeStencil> stencils_;
    std::vector<Point> boundary_points_;
    std::vector<BoundarySample> boundary_samples_;
};

/// Builds the lattice for the given shape. Throws ConfigError when n < 8.
GridHandle build_grid(Shape shape, int n);

}  // namespace gmsolve
