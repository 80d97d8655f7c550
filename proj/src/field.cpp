#include "gmsolve/field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gmsolve/errors.hpp"

namespace gmsolve {

ScalarField::ScalarField(GridHandle grid) : grid_(std::move(grid)) {
    values_.assign(grid_->node_count(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t k = 0; k < values_.size(); ++k)
        if (grid_->has_data(static_cast<int>(k))) values_[k] = 0.0;
    boundary_values_.assign(grid_->boundary_points().size(), 0.0);
}

std::vector<double> ScalarField::interior_values() const {
    std::vector<double> out;
    out.reserve(grid_->interior_count());
    for (int node : grid_->interior_nodes()) out.push_back(values_[static_cast<std::size_t>(node)]);
    return out;
}

double ScalarField::interior_sup_norm() const {
    double m = 0.0;
    for (int node : grid_->interior_nodes()) m = std::max(m, std::abs(values_[static_cast<std::size_t>(node)]));
    return m;
}

double ScalarField::boundary_sup_norm() const {
    double m = 0.0;
    for (int node : grid_->boundary_nodes()) m = std::max(m, std::abs(values_[static_cast<std::size_t>(node)]));
    for (double v : boundary_values_) m = std::max(m, std::abs(v));
    return m;
}

double ScalarField::interior_max() const {
    double m = -std::numeric_limits<double>::infinity();
    for (int node : grid_->interior_nodes()) m = std::max(m, values_[static_cast<std::size_t>(node)]);
    return m;
}

double ScalarField::boundary_max() const {
    double m = -std::numeric_limits<double>::infinity();
    for (int node : grid_->boundary_nodes()) m = std::max(m, values_[static_cast<std::size_t>(node)]);
    for (double v : boundary_values_) m = std::max(m, v);
    return m;
}

namespace {
double apply_weights(const ScalarField& f, const InterpWeights& w) {
    double v = 0.0;
    for (int k = 0; k < w.count; ++k) v += w.weights[static_cast<std::size_t>(k)] * f.value(w.refs[static_cast<std::size_t>(k)]);
    return v;
}
}  // namespace

std::optional<double> ScalarField::bilinear(Point p) const {
    const auto w = grid_->bilinear_weights(p);
    if (!w) return std::nullopt;
    return apply_weights(*this, *w);
}

double ScalarField::boundary_interpolate(Point p) const {
    return apply_weights(*this, grid_->boundary_weights(p));
}

ScalarField sample_field(const GridHandle& grid, const PointFunction& fn) {
    ScalarField f(grid);
    auto vals = f.values();
    for (std::size_t k = 0; k < vals.size(); ++k)
        if (grid->has_data(static_cast<int>(k))) vals[k] = fn(grid->position(static_cast<int>(k)));
    const auto pts = grid->boundary_points();
    auto bv = f.boundary_values();
    for (std::size_t k = 0; k < pts.size(); ++k) bv[k] = fn(pts[k]);
    return f;
}

ScalarField sample_boundary(const GridHandle& grid, const PointFunction& psi) {
    ScalarField f(grid);
    double sum = 0.0;
    std::size_t count = 0;
    for (int node : grid->boundary_nodes()) {
        f[node] = psi(grid->position(node));
        sum += f[node];
        ++count;
    }
    const auto pts = grid->boundary_points();
    auto bv = f.boundary_values();
    for (std::size_t k = 0; k < pts.size(); ++k) {
        bv[k] = psi(pts[k]);
        sum += bv[k];
        ++count;
    }
    const double fill = count > 0 ? sum / static_cast<double>(count) : 0.0;
    for (int node : grid->interior_nodes()) f[node] = fill;
    return f;
}

void copy_boundary(const ScalarField& src, ScalarField& dst) {
    require_conformable(src, dst, "copy_boundary");
    for (int node : src.grid().boundary_nodes()) dst[node] = src[node];
    std::copy(src.boundary_values().begin(), src.boundary_values().end(), dst.boundary_values().begin());
}

void require_conformable(const ScalarField& a, const ScalarField& b, const char* what) {
    if (!a.conformable(b)) throw ConfigError(std::string(what) + ": fields live on different grids");
}

}  // namespace gmsolve
