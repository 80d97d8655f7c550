#include "gmsolve/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gmsolve/errors.hpp"

namespace gmsolve {

namespace {
constexpr std::array<std::pair<int, int>, 4> kAxisOffsets{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
constexpr std::array<std::pair<int, int>, 4> kDiagonalOffsets{{{1, 1}, {-1, 1}, {1, -1}, {-1, -1}}};
}  // namespace

std::string_view to_string(Shape shape) {
    return shape == Shape::UnitSquare ? "square" : "disk";
}

std::string_view to_string(NodeClass cls) {
    switch (cls) {
        case NodeClass::Interior: return "interior";
        case NodeClass::Boundary: return "boundary";
        case NodeClass::Exterior: return "exterior";
    }
    return "exterior";
}

Shape parse_shape(std::string_view text) {
    if (text == "square" || text == "unit_square" || text == "UnitSquare") return Shape::UnitSquare;
    if (text == "disk" || text == "unit_disk" || text == "UnitDisk") return Shape::UnitDisk;
    throw ConfigError("unknown domain shape '" + std::string(text) + "'", "domain.shape");
}

double exact_measure(Shape shape) {
    return shape == Shape::UnitSquare ? 1.0 : kPi;
}

Point DomainGrid::lattice_point(int i, int j) const noexcept {
    if (shape_ == Shape::UnitSquare) {
        const double denom = static_cast<double>(n_ - 1);
        return {i / denom, j / denom};
    }
    const double r = static_cast<double>(radius_);
    return {(i - radius_) / r, (j - radius_) / r};
}

Point DomainGrid::position(int node) const noexcept {
    return lattice_point(column(node), row(node));
}

double DomainGrid::diameter() const noexcept {
    return shape_ == Shape::UnitSquare ? std::sqrt(2.0) : 2.0;
}

int DomainGrid::diagonal(int slot, int sx, int sy) const noexcept {
    const int node = interior_[static_cast<std::size_t>(slot)];
    const int i = column(node) + sx;
    const int j = row(node) + sy;
    if (i < 0 || j < 0 || i >= side_ || j >= side_) return -1;
    const int idx = node_index(i, j);
    return has_data(idx) ? idx : -1;
}

Point DomainGrid::value_position(ValueRef ref) const noexcept {
    if (is_boundary_ref(ref)) return boundary_points_[static_cast<std::size_t>(boundary_index(ref))];
    return position(ref);
}

double DomainGrid::boundary_period() const noexcept {
    return shape_ == Shape::UnitSquare ? 4.0 : 2.0 * kPi;
}

double DomainGrid::boundary_param(Point p) const noexcept {
    if (shape_ == Shape::UnitDisk) return std::atan2(p.y, p.x);
    // Perimeter arc length, counter-clockwise from the origin corner.
    const double dx0 = std::abs(p.y), dx1 = std::abs(1.0 - p.x), dy1 = std::abs(1.0 - p.y), dy0 = std::abs(p.x);
    const double m = std::min({dx0, dx1, dy1, dy0});
    if (m == dx0) return std::clamp(p.x, 0.0, 1.0);
    if (m == dx1) return 1.0 + std::clamp(p.y, 0.0, 1.0);
    if (m == dy1) return 2.0 + std::clamp(1.0 - p.x, 0.0, 1.0);
    return 3.0 + std::clamp(1.0 - p.y, 0.0, 1.0);
}

bool DomainGrid::contains(Point p) const noexcept {
    if (shape_ == Shape::UnitSquare) return p.x >= 0.0 && p.x <= 1.0 && p.y >= 0.0 && p.y <= 1.0;
    return p.x * p.x + p.y * p.y <= 1.0;
}

double DomainGrid::exit_distance(Point p, Vec2 d) const noexcept {
    if (shape_ == Shape::UnitDisk) {
        const double pd = p.dot(d);
        const double c = p.dot(p) - 1.0;
        const double disc = std::max(pd * pd - c, 0.0);
        return std::max(-pd + std::sqrt(disc), 0.0);
    }
    double t = std::numeric_limits<double>::infinity();
    if (d.x > 0) t = std::min(t, (1.0 - p.x) / d.x);
    if (d.x < 0) t = std::min(t, -p.x / d.x);
    if (d.y > 0) t = std::min(t, (1.0 - p.y) / d.y);
    if (d.y < 0) t = std::min(t, -p.y / d.y);
    return std::max(t, 0.0);
}

bool DomainGrid::cell_valid(int ci, int cj) const noexcept {
    if (ci < 0 || cj < 0 || ci + 1 >= side_ || cj + 1 >= side_) return false;
    return has_data(node_index(ci, cj)) && has_data(node_index(ci + 1, cj)) && has_data(node_index(ci, cj + 1)) &&
           has_data(node_index(ci + 1, cj + 1));
}

std::optional<InterpWeights> DomainGrid::bilinear_weights(Point p) const noexcept {
    const Point o = lattice_point(0, 0);
    const double fi = (p.x - o.x) / h_;
    const double fj = (p.y - o.y) / h_;
    const int ci = std::clamp(static_cast<int>(std::floor(fi)), 0, side_ - 2);
    const int cj = std::clamp(static_cast<int>(std::floor(fj)), 0, side_ - 2);
    const double t = fi - ci;
    const double s = fj - cj;
    constexpr double eps = 1e-12;
    if (t < -eps || t > 1.0 + eps || s < -eps || s > 1.0 + eps) return std::nullopt;
    if (!cell_valid(ci, cj)) return std::nullopt;
    InterpWeights w;
    w.count = 4;
    w.refs = {node_index(ci, cj), node_index(ci + 1, cj), node_index(ci, cj + 1), node_index(ci + 1, cj + 1)};
    w.weights = {(1 - t) * (1 - s), t * (1 - s), (1 - t) * s, t * s};
    return w;
}

InterpWeights DomainGrid::boundary_weights(Point p) const noexcept {
    const auto& samples = boundary_samples_;
    const double period = boundary_period();
    const double q = boundary_param(p);
    auto it = std::lower_bound(samples.begin(), samples.end(), q,
                               [](const BoundarySample& s, double v) { return s.param < v; });
    const bool wraps = it == samples.begin() || it == samples.end();
    // Cyclic bracketing samples.
    const BoundarySample& lo = wraps ? samples.back() : *(it - 1);
    const BoundarySample& hi = wraps ? samples.front() : *it;
    const double plo = lo.param;
    const double phi = wraps ? hi.param + period : hi.param;
    const double qq = wraps && q < plo ? q + period : q;
    InterpWeights w;
    const double span = phi - plo;
    if (span <= 0.0) {
        w.count = 1;
        w.refs[0] = hi.ref;
        w.weights[0] = 1.0;
        return w;
    }
    const double t = std::clamp((qq - plo) / span, 0.0, 1.0);
    w.count = 2;
    w.refs = {lo.ref, hi.ref, 0, 0};
    w.weights = {1.0 - t, t, 0.0, 0.0};
    return w;
}

void DomainGrid::classify() {
    classes_.assign(static_cast<std::size_t>(side_) * side_, NodeClass::Exterior);
    slot_of_.assign(classes_.size(), -1);
    for (int j = 0; j < side_; ++j) {
        for (int i = 0; i < side_; ++i) {
            NodeClass cls;
            if (shape_ == Shape::UnitSquare) {
                const bool edge = i == 0 || j == 0 || i == side_ - 1 || j == side_ - 1;
                cls = edge ? NodeClass::Boundary : NodeClass::Interior;
            } else {
                // Exact integer test keeps the classification dihedrally symmetric.
                const long a = i - radius_, b = j - radius_;
                const long r2 = a * a + b * b, big = static_cast<long>(radius_) * radius_;
                cls = r2 < big ? NodeClass::Interior : (r2 == big ? NodeClass::Boundary : NodeClass::Exterior);
            }
            const int idx = node_index(i, j);
            classes_[static_cast<std::size_t>(idx)] = cls;
            if (cls == NodeClass::Interior) {
                slot_of_[static_cast<std::size_t>(idx)] = static_cast<int>(interior_.size());
                interior_.push_back(idx);
            } else if (cls == NodeClass::Boundary) {
                boundary_nodes_.push_back(idx);
            }
        }
    }
}

void DomainGrid::build_arms() {
    arms_.resize(interior_.size());
    constexpr int di[4] = {1, -1, 0, 0};
    constexpr int dj[4] = {0, 0, 1, -1};
    for (std::size_t s = 0; s < interior_.size(); ++s) {
        const int node = interior_[s];
        const int i = column(node), j = row(node);
        for (int d = 0; d < 4; ++d) {
            const int nb = node_index(i + di[d], j + dj[d]);
            Arm arm{nb, h_};
            if (!has_data(nb)) {
                // Shortley-Weller: cut the arm at the circle, in lattice units.
                const long a = i - radius_, b = j - radius_;
                const long along = di[d] != 0 ? a * di[d] : b * dj[d];
                const long across = di[d] != 0 ? b : a;
                const double reach = std::sqrt(static_cast<double>(static_cast<long>(radius_) * radius_ - across * across));
                const double frac = reach - static_cast<double>(along);
                const double r = static_cast<double>(radius_);
                const double at = (static_cast<double>(along) + frac) / r;
                Point p = di[d] != 0 ? Point{di[d] * at, static_cast<double>(b) / r}
                                     : Point{static_cast<double>(a) / r, dj[d] * at};
                arm.target = boundary_ref(static_cast<int>(boundary_points_.size()));
                arm.length = frac * h_;
                boundary_points_.push_back(p);
            }
            arms_[s][static_cast<std::size_t>(d)] = arm;
        }
    }
}

void DomainGrid::build_measures() {
    cell_measure_.assign(interior_.size(), 0.0);
    if (shape_ == Shape::UnitSquare) {
        std::fill(cell_measure_.begin(), cell_measure_.end(), h_ * h_);
    } else {
        // 4x4 midpoint subsampling per cell, in integer units of h/8.
        const long big = 8L * radius_;
        auto inside_count = [&](int i, int j) {
            const long a = 8L * (i - radius_), b = 8L * (j - radius_);
            int count = 0;
            for (int oy : {-3, -1, 1, 3}) {
                for (int ox : {-3, -1, 1, 3}) {
                    const long x = a + ox, y = b + oy;
                    if (x * x + y * y < big * big) ++count;
                }
            }
            return count;
        };
        const double sub = h_ * h_ / 16.0;
        for (std::size_t s = 0; s < interior_.size(); ++s) {
            const int node = interior_[s];
            cell_measure_[s] = inside_count(column(node), row(node)) * sub;
        }
        // Cells centred outside the open disk still overlap it; hand their
        // inside part to the adjacent interior nodes.
        for (int j = 0; j < side_; ++j) {
            for (int i = 0; i < side_; ++i) {
                const int node = node_index(i, j);
                if (node_class(node) == NodeClass::Interior) continue;
                const int count = inside_count(i, j);
                if (count == 0) continue;
                std::vector<int> receivers;
                for (auto [si, sj] : kAxisOffsets) {
                    const int ii = i + si, jj = j + sj;
                    if (ii < 0 || jj < 0 || ii >= side_ || jj >= side_) continue;
                    const int slot = interior_slot(node_index(ii, jj));
                    if (slot >= 0) receivers.push_back(slot);
                }
                if (receivers.empty()) {
                    for (auto [si, sj] : kDiagonalOffsets) {
                        const int ii = i + si, jj = j + sj;
                        if (ii < 0 || jj < 0 || ii >= side_ || jj >= side_) continue;
                        const int slot = interior_slot(node_index(ii, jj));
                        if (slot >= 0) receivers.push_back(slot);
                    }
                }
                for (int slot : receivers) {
                    cell_measure_[static_cast<std::size_t>(slot)] += count * sub / static_cast<double>(receivers.size());
                }
            }
        }
    }
    // Neumaier summation keeps the square total at (n-2)^2 h^2 to rounding.
    double sum = 0.0, carry = 0.0;
    for (double m : cell_measure_) {
        const double t = sum + m;
        carry += std::abs(sum) >= std::abs(m) ? (sum - t) + m : (m - t) + sum;
        sum = t;
    }
    total_measure_ = sum + carry;
}

void DomainGrid::build_stencils() {
    irregular_index_.assign(interior_.size(), -1);
    for (std::size_t s = 0; s < interior_.size(); ++s) {
        const int slot = static_cast<int>(s);
        const auto& arms = arms_[s];
        bool regular = true;
        for (const Arm& a : arms) regular = regular && !is_boundary_ref(a.target) && a.length == h_;
        for (int sx : {-1, 1})
            for (int sy : {-1, 1}) regular = regular && diagonal(slot, sx, sy) >= 0;
        if (regular) continue;

        DerivativeStencil st;
        auto slot_of_ref = [&](ValueRef ref) {
            for (int k = 0; k < st.count; ++k)
                if (st.refs[static_cast<std::size_t>(k)] == ref) return k;
            st.refs[static_cast<std::size_t>(st.count)] = ref;
            return st.count++;
        };
        const int c = slot_of_ref(interior_[s]);

        // Unequal-arm three-point formulas along each axis.
        auto axis = [&](Direction plus, Direction minus, std::array<double, 9>& first, std::array<double, 9>& second) {
            const double ap = arms[plus].length, am = arms[minus].length;
            const int kp = slot_of_ref(arms[plus].target);
            const int km = slot_of_ref(arms[minus].target);
            second[static_cast<std::size_t>(kp)] += 2.0 / (ap * (ap + am));
            second[static_cast<std::size_t>(km)] += 2.0 / (am * (ap + am));
            second[static_cast<std::size_t>(c)] += -2.0 / (ap * am);
            first[static_cast<std::size_t>(kp)] += am / (ap * (ap + am));
            first[static_cast<std::size_t>(km)] += -ap / (am * (ap + am));
            first[static_cast<std::size_t>(c)] += (ap - am) / (ap * am);
        };
        axis(East, West, st.dx, st.dxx);
        axis(North, South, st.dy, st.dyy);

        // Mixed derivative: each usable diagonal gives a quadratic-exact
        // estimate once the axis derivatives are known; average them.
        std::vector<std::pair<int, std::pair<int, int>>> diags;
        for (int sx : {-1, 1})
            for (int sy : {-1, 1}) {
                const int d = diagonal(slot, sx, sy);
                if (d >= 0) diags.push_back({d, {sx, sy}});
            }
        if (diags.empty()) throw GeometryError("interior node without a usable diagonal neighbour");
        const double w = 1.0 / static_cast<double>(diags.size());
        // Snapshot the axis weights before the diagonals extend the ref list.
        const auto dx = st.dx, dy = st.dy, dxx = st.dxx, dyy = st.dyy;
        const int axis_count = st.count;
        for (const auto& [d, sign] : diags) {
            const double sx = sign.first, sy = sign.second;
            const double scale = w / (sx * sy * h_ * h_);
            const int kd = slot_of_ref(d);
            st.dxy[static_cast<std::size_t>(kd)] += scale;
            st.dxy[static_cast<std::size_t>(c)] -= scale;
            for (int k = 0; k < axis_count; ++k) {
                const auto uk = static_cast<std::size_t>(k);
                st.dxy[uk] -= scale * (sx * h_ * dx[uk] + sy * h_ * dy[uk] + 0.5 * h_ * h_ * (dxx[uk] + dyy[uk]));
            }
        }
        irregular_index_[s] = static_cast<int>(stencils_.size());
        stencils_.push_back(st);
    }
}

void DomainGrid::build_boundary_samples() {
    for (int node : boundary_nodes_) boundary_samples_.push_back({boundary_param(position(node)), node});
    for (std::size_t k = 0; k < boundary_points_.size(); ++k)
        boundary_samples_.push_back({boundary_param(boundary_points_[k]), boundary_ref(static_cast<int>(k))});
    std::sort(boundary_samples_.begin(), boundary_samples_.end(),
              [](const BoundarySample& a, const BoundarySample& b) { return a.param < b.param; });
}

GridHandle build_grid(Shape shape, int n) {
    if (n < 8) throw ConfigError("grid needs n >= 8 nodes per axis, got " + std::to_string(n), "domain.n");
    std::shared_ptr<DomainGrid> g(new DomainGrid());
    g->shape_ = shape;
    g->n_ = n;
    g->h_ = 1.0 / static_cast<double>(n - 1);
    if (shape == Shape::UnitSquare) {
        g->side_ = n;
        g->origin_ = 0.0;
    } else {
        g->radius_ = n - 1;
        g->side_ = 2 * (n - 1) + 1;
        g->origin_ = -1.0;
    }
    g->classify();
    g->build_arms();
    g->build_measures();
    g->build_stencils();
    g->build_boundary_samples();
    return g;
}

}  // namespace gmsolve
