#include "gmsolve/calculus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gmsolve/errors.hpp"

namespace gmsolve {

namespace {

double apply(const ScalarField& u, const InterpWeights& w) {
    double v = 0.0;
    for (int k = 0; k < w.count; ++k) {
        const auto uk = static_cast<std::size_t>(k);
        v += w.weights[uk] * u.value(w.refs[uk]);
    }
    return v;
}

struct Endpoint {
    InterpWeights weights;
    double length = 0.0;
};

// Where the arm x + len*dir ends and how to read the value there.
Endpoint arm_endpoint(const DomainGrid& g, Point x, Vec2 dir, double len) {
    const double exit = g.exit_distance(x, dir);
    if (exit >= len) {
        if (auto w = g.bilinear_weights(x + dir * len)) return {*w, len};
    }
    // Clipped by the boundary, or the landing cell pokes outside: end on the curve.
    if (!(exit > 0.0)) throw GeometryError("directional arm of zero length");
    return {g.boundary_weights(x + dir * exit), exit};
}

double second_difference(double up, double um, double u0, double ap, double am) {
    return 2.0 / (ap + am) * ((up - u0) / ap + (um - u0) / am);
}

}  // namespace

void node_derivatives(const ScalarField& u, int slot, Vec2& grad, SymMat2& hess) {
    const DomainGrid& g = u.grid();
    if (g.regular(slot)) {
        const int node = g.interior_nodes()[static_cast<std::size_t>(slot)];
        const int s = g.side();
        const double h = g.h();
        const double c = u[node];
        const double e = u[node + 1], w = u[node - 1], n = u[node + s], so = u[node - s];
        const double ne = u[node + s + 1], nw = u[node + s - 1], se = u[node - s + 1], sw = u[node - s - 1];
        grad = {(e - w) / (2.0 * h), (n - so) / (2.0 * h)};
        hess = {(e - 2.0 * c + w) / (h * h), (ne - nw - se + sw) / (4.0 * h * h), (n - 2.0 * c + so) / (h * h)};
        return;
    }
    const DerivativeStencil& st = g.stencil(slot);
    grad = {};
    hess = {};
    for (int k = 0; k < st.count; ++k) {
        const auto uk = static_cast<std::size_t>(k);
        const double v = u.value(st.refs[uk]);
        grad.x += st.dx[uk] * v;
        grad.y += st.dy[uk] * v;
        hess.xx += st.dxx[uk] * v;
        hess.xy += st.dxy[uk] * v;
        hess.yy += st.dyy[uk] * v;
    }
}

DiscreteDerivatives derivatives(const ScalarField& u) {
    const std::size_t count = u.grid().interior_count();
    DiscreteDerivatives d;
    d.grad.resize(count);
    d.hess.resize(count);
    for (std::size_t s = 0; s < count; ++s) node_derivatives(u, static_cast<int>(s), d.grad[s], d.hess[s]);
    return d;
}

double directional_dd(const ScalarField& u, int node, double theta, double k) {
    const DomainGrid& g = u.grid();
    if (g.interior_slot(node) < 0) throw GeometryError("directional difference requested at a non-interior node");
    if (!(k > 0.0)) throw ConfigError("arm length must be positive", "k");
    const Point x = g.position(node);
    const Vec2 dir{std::cos(theta), std::sin(theta)};
    const double len = k * g.h();
    const Endpoint plus = arm_endpoint(g, x, dir, len);
    const Endpoint minus = arm_endpoint(g, x, dir * -1.0, len);
    return second_difference(apply(u, plus.weights), apply(u, minus.weights), u[node], plus.length, minus.length);
}

WideStencil::WideStencil(const GridHandle& grid, int directions, int arm_nodes) : grid_(grid), directions_(directions) {
    if (directions < 2) throw ConfigError("wide stencil needs at least 2 directions", "solver.directions");
    if (arm_nodes < 1) throw ConfigError("wide stencil arm must be at least one node", "solver.arm");
    const DomainGrid& g = *grid_;
    const auto nodes = g.interior_nodes();
    arms_.resize(nodes.size() * static_cast<std::size_t>(directions));
    center_.assign(nodes.size(), 0.0);
    const double len = arm_nodes * g.h();
    for (std::size_t s = 0; s < nodes.size(); ++s) {
        const int node = nodes[s];
        const Point x = g.position(node);
        double steepest = 0.0;
        for (int j = 0; j < directions; ++j) {
            const double theta = j * kPi / directions;
            const Vec2 dir{std::cos(theta), std::sin(theta)};
            const Endpoint p = arm_endpoint(g, x, dir, len);
            const Endpoint m = arm_endpoint(g, x, dir * -1.0, len);
            Arm& a = arms_[s * static_cast<std::size_t>(directions) + static_cast<std::size_t>(j)];
            a.plus = p.weights;
            a.minus = m.weights;
            a.len_plus = p.length;
            a.len_minus = m.length;
            // Coefficient of u(x), counting interpolation weight that lands on x itself.
            auto self = [node](const InterpWeights& w) {
                double v = 0.0;
                for (int k = 0; k < w.count; ++k)
                    if (w.refs[static_cast<std::size_t>(k)] == node) v += w.weights[static_cast<std::size_t>(k)];
                return v;
            };
            const double cw = 2.0 / (p.length + m.length) * ((self(p.weights) - 1.0) / p.length + (self(m.weights) - 1.0) / m.length);
            steepest = std::min(steepest, cw);
        }
        center_[s] = steepest;
    }
}

std::pair<double, double> WideStencil::extremes(const ScalarField& u, int slot) const {
    const auto base = static_cast<std::size_t>(slot) * static_cast<std::size_t>(directions_);
    const double u0 = u.interior(slot);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int j = 0; j < directions_; ++j) {
        const Arm& a = arms_[base + static_cast<std::size_t>(j)];
        const double dd = second_difference(apply(u, a.plus), apply(u, a.minus), u0, a.len_plus, a.len_minus);
        lo = std::min(lo, dd);
        hi = std::max(hi, dd);
    }
    return {lo, hi};
}

ResidualOperator::ResidualOperator(const OperatorSpec& spec, const GridHandle& grid, const Scheme& scheme)
    : grid_(grid), op_(spec, grid), scheme_(scheme) {
    if (scheme_.mode == SchemeMode::WideStencil) {
        const OperatorKind k = spec.kind;
        if (k != OperatorKind::PucciMinus && k != OperatorKind::PucciPlus && k != OperatorKind::Trace)
            throw ConfigError("wide stencil mode supports the pucci and trace kinds only", "solver.mode");
        wide_ = std::make_unique<WideStencil>(grid_, scheme_.directions, scheme_.arm_nodes());
    } else {
        trace_fast_ = spec.kind == OperatorKind::Trace;
    }
}

double ResidualOperator::apply(const ScalarField& u, int slot) const {
    if (wide_) {
        const auto [lo, hi] = wide_->extremes(u, slot);
        return op_.eval(slot, SymMat2::diag(lo, hi), {}, u.interior(slot));
    }
    const DomainGrid& g = *grid_;
    if (trace_fast_) {
        if (g.regular(slot)) {
            const int node = g.interior_nodes()[static_cast<std::size_t>(slot)];
            const int s = g.side();
            const double h = g.h();
            return (u[node + 1] + u[node - 1] + u[node + s] + u[node - s] - 4.0 * u[node]) / (h * h);
        }
        const DerivativeStencil& st = g.stencil(slot);
        double v = 0.0;
        for (int k = 0; k < st.count; ++k) {
            const auto uk = static_cast<std::size_t>(k);
            v += (st.dxx[uk] + st.dyy[uk]) * u.value(st.refs[uk]);
        }
        return v;
    }
    Vec2 grad;
    SymMat2 hess;
    node_derivatives(u, slot, grad, hess);
    return op_.eval(slot, hess, grad, u.interior(slot));
}

void ResidualOperator::residual(const ScalarField& u, const ScalarField& rhs, std::span<double> out) const {
    const auto nodes = grid_->interior_nodes();
    for (std::size_t s = 0; s < nodes.size(); ++s) out[s] = apply(u, static_cast<int>(s)) - rhs[nodes[s]];
}

double ResidualOperator::diagonal_scale(int slot) const noexcept {
    if (wide_) return 2.0 * std::abs(wide_->center_weight(slot));
    const DomainGrid& g = *grid_;
    if (g.regular(slot)) return 4.0 / (g.h() * g.h());
    // The centre node is always the first reference of an irregular stencil.
    const DerivativeStencil& st = g.stencil(slot);
    return std::abs(st.dxx[0]) + std::abs(st.dyy[0]) + 2.0 * std::abs(st.dxy[0]);
}

ScalarField assemble_residual(const OperatorSpec& spec, const ScalarField& u, const ScalarField& rhs,
                              const Scheme& scheme) {
    require_conformable(u, rhs, "assemble_residual");
    ResidualOperator R(spec, u.grid_handle(), scheme);
    std::vector<double> r(u.grid().interior_count());
    R.residual(u, rhs, r);
    ScalarField out(u.grid_handle());
    for (std::size_t s = 0; s < r.size(); ++s) out.interior(static_cast<int>(s)) = r[s];
    return out;
}

}  // namespace gmsolve
