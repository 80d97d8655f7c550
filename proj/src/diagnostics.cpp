#include "gmsolve/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "gmsolve/calculus.hpp"
#include "gmsolve/errors.hpp"

namespace gmsolve {

namespace {

constexpr double kFloor = 1e-12;

double distance_to_boundary(const DomainGrid& g, Point x) {
    if (g.shape() == Shape::UnitDisk) return 1.0 - x.norm();
    return std::min({x.x, 1.0 - x.x, x.y, 1.0 - x.y});
}

std::vector<std::pair<int, int>> disc_offsets(double radius_nodes) {
    const int r = static_cast<int>(std::floor(radius_nodes + 1e-9));
    const double r2 = radius_nodes * radius_nodes + 1e-9;
    std::vector<std::pair<int, int>> out;
    for (int dj = -r; dj <= r; ++dj)
        for (int di = -r; di <= r; ++di)
            if (di * di + dj * dj <= r2) out.emplace_back(di, dj);
    return out;
}

bool is_constant(const std::vector<double>& v) {
    if (v.empty()) return true;
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *lo == *hi;
}

std::vector<double> interior_of(const ScalarField& v) {
    return v.interior_values();
}

}  // namespace

double lp_norm(const DomainGrid& grid, const std::vector<double>& per_slot, double p) {
    if (!(p >= 1.0)) throw ConfigError("p must be at least 1", "diagnostics.p");
    const auto w = grid.cell_measures();
    double sum = 0.0;
    for (std::size_t s = 0; s < per_slot.size(); ++s) sum += std::pow(std::abs(per_slot[s]), p) * w[s];
    return std::pow(sum, 1.0 / p);
}

double lp_norm(const ScalarField& v, double p) {
    return lp_norm(v.grid(), interior_of(v), p);
}

double w2p_norm(const ScalarField& u, double p) {
    if (!(p > 2.0)) throw ConfigError("W2p norm needs p > 2", "diagnostics.p");
    const DiscreteDerivatives d = derivatives(u);
    std::vector<double> grad(d.grad.size()), hess(d.hess.size());
    for (std::size_t s = 0; s < grad.size(); ++s) {
        grad[s] = d.grad[s].norm();
        hess[s] = d.hess[s].frobenius();
    }
    const DomainGrid& g = u.grid();
    return lp_norm(u, p) + lp_norm(g, grad, p) + lp_norm(g, hess, p);
}

double lipschitz_seminorm(const ScalarField& u) {
    const DomainGrid& g = u.grid();
    const double h = g.h();
    const int side = g.side();
    double lip = 0.0;
    for (int j = 0; j < side; ++j) {
        for (int i = 0; i < side; ++i) {
            const int a = g.node_index(i, j);
            if (!g.has_data(a)) continue;
            if (i + 1 < side && g.has_data(a + 1)) lip = std::max(lip, std::abs(u[a + 1] - u[a]) / h);
            if (j + 1 < side && g.has_data(a + side)) lip = std::max(lip, std::abs(u[a + side] - u[a]) / h);
        }
    }
    const auto nodes = g.interior_nodes();
    for (std::size_t s = 0; s < nodes.size(); ++s) {
        for (int d = 0; d < 4; ++d) {
            const Arm& arm = g.arm(static_cast<int>(s), static_cast<Direction>(d));
            if (is_boundary_ref(arm.target))
                lip = std::max(lip, std::abs(u.value(arm.target) - u[nodes[s]]) / arm.length);
        }
    }
    return lip;
}

double lipschitz_norm(const ScalarField& u) {
    return std::max(u.interior_sup_norm(), u.boundary_sup_norm()) + lipschitz_seminorm(u);
}

HolderReport holder_gradient(const ScalarField& u, double alpha, std::size_t samples,
                             std::vector<std::uint64_t> seeds) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0, 1]", "diagnostics.alpha");
    const DomainGrid& g = u.grid();
    const DiscreteDerivatives d = derivatives(u);
    const auto nodes = g.interior_nodes();
    const std::size_t count = nodes.size();
    std::vector<Point> pos(count);
    for (std::size_t s = 0; s < count; ++s) pos[s] = g.position(nodes[s]);
    const double half = 0.5 * alpha;

    auto quotient = [&](std::size_t a, std::size_t b) {
        const Vec2 dx = pos[a] - pos[b];
        const Vec2 dg = d.grad[a] - d.grad[b];
        return std::sqrt(dg.dot(dg)) / std::pow(dx.dot(dx), half);
    };

    HolderReport rep;
    if (g.n() <= 65) {
        rep.exhaustive = true;
        for (std::size_t a = 0; a < count; ++a)
            for (std::size_t b = a + 1; b < count; ++b) rep.value = std::max(rep.value, quotient(a, b));
        rep.pairs = count * (count - 1) / 2;
        return rep;
    }
    // Every pair on a coarse sub-lattice catches the far pairs that
    // dominate for alpha < 1.
    const auto stride = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(count) / 2048.0)));
    std::vector<std::size_t> coarse;
    for (std::size_t s = 0; s < count; ++s)
        if (g.column(nodes[s]) % stride == 0 && g.row(nodes[s]) % stride == 0) coarse.push_back(s);
    for (std::size_t a = 0; a < coarse.size(); ++a)
        for (std::size_t b = a + 1; b < coarse.size(); ++b) rep.value = std::max(rep.value, quotient(coarse[a], coarse[b]));
    rep.pairs = coarse.size() * (coarse.size() - 1) / 2;

    for (std::uint64_t seed : seeds) {
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<std::size_t> pick(0, count - 1);
        double best = 0.0;
        for (std::size_t k = 0; k < samples; ++k) {
            const std::size_t a = pick(rng), b = pick(rng);
            if (a != b) best = std::max(best, quotient(a, b));
        }
        rep.per_seed.push_back(best);
        rep.value = std::max(rep.value, best);
        rep.pairs += samples;
    }
    return rep;
}

std::vector<double> default_radii(const DomainGrid& grid) {
    std::vector<double> out;
    for (double r = 2.0 * grid.h(); r <= 0.25 + 1e-12; r *= 2.0) out.push_back(r);
    return out;
}

double pbmo_seminorm(const DomainGrid& grid, const std::vector<double>& v, int components, double p,
                     const std::vector<double>& radii_in, BallMode mode) {
    if (!(p >= 1.0)) throw ConfigError("p must be at least 1", "diagnostics.p");
    if (components < 1) throw ConfigError("need at least one component");
    if (is_constant(v)) return 0.0;
    const std::vector<double> radii = radii_in.empty() ? default_radii(grid) : radii_in;
    const auto nodes = grid.interior_nodes();
    const auto w = grid.cell_measures();
    const auto nc = static_cast<std::size_t>(components);
    const double h = grid.h();
    std::vector<double> mean(nc);
    std::vector<int> members;
    double best = 0.0;
    for (double rho : radii) {
        if (!(rho > 0.0)) throw ConfigError("radii must be positive", "diagnostics.radii");
        const auto offsets = disc_offsets(rho / h);
        for (std::size_t c = 0; c < nodes.size(); ++c) {
            const int node = nodes[c];
            if (mode == BallMode::Interior && distance_to_boundary(grid, grid.position(node)) < rho - 1e-12) continue;
            const int ci = grid.column(node), cj = grid.row(node);
            members.clear();
            double wsum = 0.0;
            std::fill(mean.begin(), mean.end(), 0.0);
            for (auto [di, dj] : offsets) {
                const int i = ci + di, j = cj + dj;
                if (i < 0 || j < 0 || i >= grid.side() || j >= grid.side()) continue;
                const int slot = grid.interior_slot(grid.node_index(i, j));
                if (slot < 0) continue;
                members.push_back(slot);
                const auto us = static_cast<std::size_t>(slot);
                wsum += w[us];
                for (std::size_t k = 0; k < nc; ++k) mean[k] += w[us] * v[us * nc + k];
            }
            if (wsum <= 0.0) continue;
            for (double& m : mean) m /= wsum;
            double dev = 0.0;
            for (int slot : members) {
                const auto us = static_cast<std::size_t>(slot);
                double e2 = 0.0;
                for (std::size_t k = 0; k < nc; ++k) {
                    const double e = v[us * nc + k] - mean[k];
                    e2 += e * e;
                }
                dev += w[us] * std::pow(e2, 0.5 * p);
            }
            best = std::max(best, std::pow(dev / wsum, 1.0 / p));
        }
    }
    return best;
}

double pbmo_seminorm(const ScalarField& v, double p, const std::vector<double>& radii, BallMode mode) {
    return pbmo_seminorm(v.grid(), interior_of(v), 1, p, radii, mode);
}

std::vector<double> hessian_components(const ScalarField& u) {
    const DiscreteDerivatives d = derivatives(u);
    std::vector<double> out;
    out.reserve(3 * d.hess.size());
    for (const SymMat2& m : d.hess) {
        out.push_back(m.xx);
        out.push_back(std::sqrt(2.0) * m.xy);
        out.push_back(m.yy);
    }
    return out;
}

double pbmo_hessian(const ScalarField& u, double p, const std::vector<double>& radii, BallMode mode) {
    return pbmo_seminorm(u.grid(), hessian_components(u), 3, p, radii, mode);
}

AprioriRatios apriori_ratios(const ScalarField& u, const ScalarField& psi, const ScalarField& f,
                             const ScalarField& g_u, double p, const std::vector<double>& radii) {
    require_conformable(u, psi, "apriori_ratios");
    require_conformable(u, f, "apriori_ratios");
    require_conformable(u, g_u, "apriori_ratios");
    AprioriRatios r;
    const double sup_u = u.interior_sup_norm();
    r.w2p_u = w2p_norm(u, p);
    r.w2p_denominator = std::max(kFloor, sup_u + w2p_norm(psi, p) + lp_norm(g_u, p) + lp_norm(f, p));
    r.ratio_w2p = r.w2p_u / r.w2p_denominator;
    r.bmo_u = pbmo_hessian(u, p, radii);
    r.bmo_denominator = std::max(kFloor, sup_u + pbmo_hessian(psi, p, radii) + pbmo_seminorm(g_u, p, radii) +
                                             pbmo_seminorm(f, p, radii));
    r.ratio_bmo = r.bmo_u / r.bmo_denominator;
    return r;
}

NormReport norm_report(const ScalarField& u, double p, double alpha, const std::vector<double>& radii) {
    NormReport r;
    r.p = p;
    r.alpha = alpha;
    r.lp = lp_norm(u, p);
    r.w2p = w2p_norm(u, p);
    r.lip = lipschitz_norm(u);
    r.holder_grad = holder_gradient(u, alpha).value;
    r.pbmo_d2 = pbmo_hessian(u, p, radii, BallMode::Interior);
    r.pbmo_d2_clipped = pbmo_hessian(u, p, radii, BallMode::Clipped);
    return r;
}

nlohmann::json to_json(const NormReport& r) {
    nlohmann::json j{{"p", r.p},
                     {"alpha", r.alpha},
                     {"lp", r.lp},
                     {"w2p", r.w2p},
                     {"lip", r.lip},
                     {"holder_grad", r.holder_grad},
                     {"pbmo_d2", r.pbmo_d2},
                     {"pbmo_d2_clipped", r.pbmo_d2_clipped}};
    if (r.apriori) {
        j["apriori_ratio_w2p"] = r.apriori->ratio_w2p;
        j["apriori_ratio_bmo"] = r.apriori->ratio_bmo;
    }
    return j;
}

}  // namespace gmsolve
