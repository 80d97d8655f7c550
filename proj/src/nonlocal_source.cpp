#include "gmsolve/nonlocal_source.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "gmsolve/errors.hpp"

namespace gmsolve {

DistributionFunction::DistributionFunction(const ScalarField& u) {
    const DomainGrid& g = u.grid();
    const auto nodes = g.interior_nodes();
    const auto w = g.cell_measures();
    std::vector<std::size_t> order(nodes.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return u[nodes[a]] < u[nodes[b]]; });
    values_.resize(nodes.size());
    prefix_measure_.assign(nodes.size() + 1, 0.0);
    prefix_value_.assign(nodes.size() + 1, 0.0);
    for (std::size_t k = 0; k < order.size(); ++k) {
        const double v = u[nodes[order[k]]];
        const double m = w[order[k]];
        values_[k] = v;
        prefix_measure_[k + 1] = prefix_measure_[k] + m;
        prefix_value_[k + 1] = prefix_value_[k] + v * m;
    }
}

double DistributionFunction::superlevel(double t) const noexcept {
    const auto k = std::lower_bound(values_.begin(), values_.end(), t) - values_.begin();
    return total() - prefix_measure_[static_cast<std::size_t>(k)];
}

double DistributionFunction::strict_superlevel(double t) const noexcept {
    const auto k = std::upper_bound(values_.begin(), values_.end(), t) - values_.begin();
    return total() - prefix_measure_[static_cast<std::size_t>(k)];
}

double DistributionFunction::band(double t_lo, double t_hi) const noexcept {
    if (t_hi < t_lo) return 0.0;
    const auto lo = std::lower_bound(values_.begin(), values_.end(), t_lo) - values_.begin();
    const auto hi = std::upper_bound(values_.begin(), values_.end(), t_hi) - values_.begin();
    return prefix_measure_[static_cast<std::size_t>(hi)] - prefix_measure_[static_cast<std::size_t>(lo)];
}

double DistributionFunction::mollified_superlevel(double v, double delta) const noexcept {
    // A value w contributes min(max(w - a, 0), delta) / delta with a = v - delta.
    const double a = v - delta;
    const auto lo = static_cast<std::size_t>(std::upper_bound(values_.begin(), values_.end(), a) - values_.begin());
    const auto hi = static_cast<std::size_t>(std::lower_bound(values_.begin(), values_.end(), v) - values_.begin());
    const double above = total() - prefix_measure_[hi];
    if (hi <= lo) return above;
    const double mass = prefix_measure_[hi] - prefix_measure_[lo];
    const double first = prefix_value_[hi] - prefix_value_[lo];
    return above + (first - a * mass) / delta;
}

DistributionFunction build_distribution(const ScalarField& u) {
    return DistributionFunction(u);
}

double superlevel_measure(const DistributionFunction& dist, double t) {
    return dist.superlevel(t);
}

SourceFunction SourceFunction::affine(double a, double b) {
    SourceFunction f;
    f.kind = Kind::Affine;
    f.a = a;
    f.b = b;
    return f;
}

SourceFunction SourceFunction::exp_decay(double a, double b) {
    SourceFunction f;
    f.kind = Kind::ExpDecay;
    f.a = a;
    f.b = b;
    return f;
}

SourceFunction SourceFunction::tabulated(std::vector<double> s, std::vector<double> g) {
    if (s.size() != g.size() || s.size() < 2) throw ConfigError("table needs at least two (s, g) rows", "source.g");
    for (std::size_t k = 1; k < s.size(); ++k)
        if (!(s[k] > s[k - 1])) throw ConfigError("table s values must increase", "source.g");
    for (std::size_t k = 0; k < s.size(); ++k)
        if (!std::isfinite(s[k]) || !std::isfinite(g[k])) throw ConfigError("non-finite table entry", "source.g");
    SourceFunction f;
    f.kind = Kind::Tabulated;
    f.s = std::move(s);
    f.g = std::move(g);
    return f;
}

SourceFunction SourceFunction::from_csv(std::istream& in) {
    std::string line;
    std::vector<double> s, g;
    int lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw ConfigError("expected two columns", "source.table", lineno);
        try {
            std::size_t u1 = 0, u2 = 0;
            const std::string a = line.substr(0, comma), b = line.substr(comma + 1);
            const double sv = std::stod(a, &u1);
            const double gv = std::stod(b, &u2);
            s.push_back(sv);
            g.push_back(gv);
        } catch (const std::exception&) {
            if (header_seen || !s.empty()) throw ConfigError("cannot parse row '" + line + "'", "source.table", lineno);
            header_seen = true;
        }
    }
    return tabulated(std::move(s), std::move(g));
}

SourceFunction SourceFunction::load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'", "source.table");
    return from_csv(in);
}

double SourceFunction::operator()(double x) const {
    switch (kind) {
        case Kind::Affine: return a + b * x;
        case Kind::ExpDecay: return a * std::exp(-b * x);
        case Kind::Tabulated: {
            if (x <= s.front()) return g.front();
            if (x >= s.back()) return g.back();
            const auto k = static_cast<std::size_t>(std::upper_bound(s.begin(), s.end(), x) - s.begin());
            const double t = (x - s[k - 1]) / (s[k] - s[k - 1]);
            return (1.0 - t) * g[k - 1] + t * g[k];
        }
    }
    return 0.0;
}

double SourceFunction::lipschitz(double upto) const {
    switch (kind) {
        case Kind::Affine: return std::abs(b);
        case Kind::ExpDecay: return std::abs(a * b) * (b >= 0.0 ? 1.0 : std::exp(-b * upto));
        case Kind::Tabulated: {
            double lip = 0.0;
            for (std::size_t k = 1; k < s.size(); ++k) lip = std::max(lip, std::abs((g[k] - g[k - 1]) / (s[k] - s[k - 1])));
            return lip;
        }
    }
    return 0.0;
}

void SourceFunction::check_domain(double upto) const {
    if (kind != Kind::Tabulated) return;
    const double tol = 1e-9 * std::max(1.0, upto);
    if (s.front() > tol || s.back() < upto - tol) {
        std::ostringstream msg;
        msg << "table covers [" << s.front() << ", " << s.back() << "] but must span [0, " << upto << "]";
        throw ConfigError(msg.str(), "source.g");
    }
}

std::string SourceFunction::describe() const {
    std::ostringstream out;
    switch (kind) {
        case Kind::Affine: out << "affine(" << a << " + " << b << " s)"; break;
        case Kind::ExpDecay: out << "exp_decay(" << a << " exp(-" << b << " s))"; break;
        case Kind::Tabulated: out << "tabulated(" << s.size() << " knots)"; break;
    }
    return out.str();
}

double apply_g(const SourceSpec& src, const DomainGrid& grid, double measure) {
    const double total = grid.total_measure();
    double s = std::clamp(measure, 0.0, total);
    if (src.rescale) s *= exact_measure(grid.shape()) / total;
    return src.g(s);
}

ScalarField grad_mercier_source(const ScalarField& u, const SourceSpec& src) {
    const DistributionFunction dist(u);
    const DomainGrid& g = u.grid();
    src.g.check_domain(src.rescale ? exact_measure(g.shape()) : g.total_measure());
    ScalarField out(u.grid_handle());
    for (int node : g.interior_nodes()) {
        const double m = src.strict_ties ? dist.strict_superlevel(u[node]) : dist.superlevel(u[node]);
        out[node] = apply_g(src, g, m);
    }
    return out;
}

ScalarField mollified_source(const ScalarField& u, const SourceSpec& src) {
    if (!(src.delta > 0.0)) throw ConfigError("mollified source needs delta > 0", "source.delta");
    const DistributionFunction dist(u);
    const DomainGrid& g = u.grid();
    src.g.check_domain(src.rescale ? exact_measure(g.shape()) : g.total_measure());
    ScalarField out(u.grid_handle());
    for (int node : g.interior_nodes()) out[node] = apply_g(src, g, dist.mollified_superlevel(u[node], src.delta));
    return out;
}

ScalarField nonlocal_source(const ScalarField& u, const SourceSpec& src) {
    return src.delta > 0.0 ? mollified_source(u, src) : grad_mercier_source(u, src);
}

double level_flatness(const ScalarField& u, double eps) {
    if (!(eps > 0.0)) throw ConfigError("flatness width must be positive", "eps");
    const DistributionFunction dist(u);
    double worst = 0.0;
    for (double v : dist.sorted_values()) worst = std::max(worst, dist.band(v - eps, v + eps));
    return worst;
}

}  // namespace gmsolve
