#include "gmsolve/operators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "gmsolve/errors.hpp"
#include "gmsolve/expression.hpp"

namespace gmsolve {

namespace {

constexpr double kSpectrumSlack = 1e-12;

double convex_value(OperatorKind kind, const Ellipticity& e, const SymMat2& m, const SymMat2* coef, int count) {
    switch (kind) {
        case OperatorKind::Trace: return m.trace();
        case OperatorKind::LinearVarCoef: return coef[0].contract(m);
        case OperatorKind::PucciMinus: return pucci_minus(m, e);
        case OperatorKind::PucciPlus: return pucci_plus(m, e);
        case OperatorKind::BellmanConvex: {
            double best = coef[0].contract(m);
            for (int a = 1; a < count; ++a) best = std::max(best, coef[a].contract(m));
            return best;
        }
        case OperatorKind::AsymptoticallyConvex: break;
    }
    throw ConfigError("asymptotically convex operator used as its own convex part", "operator.base");
}

std::vector<SymMat2> sample_coefficients(const OperatorSpec& s, Point x) {
    if (s.kind == OperatorKind::LinearVarCoef) return {s.A(x)};
    std::vector<SymMat2> out;
    if (s.kind == OperatorKind::BellmanConvex)
        for (const auto& a : s.family) out.push_back(a(x));
    return out;
}

double convex_at(const OperatorSpec& s, const SymMat2& m, Point x) {
    const auto coef = sample_coefficients(s, x);
    return convex_value(s.kind, s.ellipticity, m, coef.data(), static_cast<int>(coef.size()));
}

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void check_spectrum(const SymMat2& a, const Ellipticity& e, Point x, const char* what) {
    const auto [lo, hi] = a.eigenvalues();
    if (lo < e.lambda - kSpectrumSlack || hi > e.Lambda + kSpectrumSlack) {
        std::ostringstream msg;
        msg << "spectrum [" << lo << ", " << hi << "] of " << what << " at (" << x.x << ", " << x.y
            << ") leaves the declared bounds [" << e.lambda << ", " << e.Lambda << "]";
        throw ConfigError(msg.str(), "operator");
    }
}

SymMat2 random_symmetric(std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    const double a = u(rng), b = u(rng), c = u(rng);
    return {a, b, c};
}

}  // namespace

void Ellipticity::validate() const {
    if (!(lambda > 0.0)) throw ConfigError("lambda must be positive", "operator.lambda");
    if (!(Lambda >= lambda)) throw ConfigError("Lambda must be at least lambda", "operator.Lambda");
    if (!(gamma >= 0.0)) throw ConfigError("gamma must be non-negative", "operator.gamma");
    if (!(omega >= 0.0)) throw ConfigError("omega must be non-negative", "operator.omega");
}

double pucci_minus(const SymMat2& m, double lambda, double Lambda) {
    const auto [e1, e2] = m.eigenvalues();
    const double pos = std::max(e1, 0.0) + std::max(e2, 0.0);
    const double neg = std::min(e1, 0.0) + std::min(e2, 0.0);
    return lambda * pos + Lambda * neg;
}

double pucci_plus(const SymMat2& m, double lambda, double Lambda) {
    const auto [e1, e2] = m.eigenvalues();
    const double pos = std::max(e1, 0.0) + std::max(e2, 0.0);
    const double neg = std::min(e1, 0.0) + std::min(e2, 0.0);
    return Lambda * pos + lambda * neg;
}

CoefFn CoefFn::constant(double v) {
    return {format_number(v), [v](Point) { return v; }};
}

CoefFn CoefFn::parse(std::string_view text, const std::string& field) {
    auto expr = std::make_shared<const Expression>(Expression::parse(text, field));
    return {std::string(text), [expr](Point x) { return (*expr)(x); }};
}

CoefFn CoefFn::native(std::function<double(Point)> fn, std::string label) {
    return {std::move(label), std::move(fn)};
}

MatrixCoef MatrixCoef::constant(const SymMat2& a) {
    return {CoefFn::constant(a.xx), CoefFn::constant(a.xy), CoefFn::constant(a.yy)};
}

std::string_view to_string(OperatorKind kind) {
    switch (kind) {
        case OperatorKind::Trace: return "trace";
        case OperatorKind::LinearVarCoef: return "linear";
        case OperatorKind::PucciMinus: return "pucci_minus";
        case OperatorKind::PucciPlus: return "pucci_plus";
        case OperatorKind::BellmanConvex: return "bellman";
        case OperatorKind::AsymptoticallyConvex: return "asymptotically_convex";
    }
    return "trace";
}

OperatorKind parse_operator_kind(std::string_view t) {
    if (t == "trace" || t == "Trace" || t == "laplacian") return OperatorKind::Trace;
    if (t == "linear" || t == "LinearVarCoef") return OperatorKind::LinearVarCoef;
    if (t == "pucci_minus" || t == "PucciMinus") return OperatorKind::PucciMinus;
    if (t == "pucci_plus" || t == "PucciPlus") return OperatorKind::PucciPlus;
    if (t == "bellman" || t == "BellmanConvex") return OperatorKind::BellmanConvex;
    if (t == "asymptotically_convex" || t == "AsymptoticallyConvex") return OperatorKind::AsymptoticallyConvex;
    throw ConfigError("unknown operator kind '" + std::string(t) + "'", "operator.kind");
}

OperatorSpec OperatorSpec::trace() {
    OperatorSpec s;
    s.kind = OperatorKind::Trace;
    s.ellipticity = {1.0, 1.0, 0.0, 0.0};
    return s;
}

OperatorSpec OperatorSpec::pucci_minus(double lambda, double Lambda) {
    OperatorSpec s;
    s.kind = OperatorKind::PucciMinus;
    s.ellipticity = {lambda, Lambda, 0.0, 0.0};
    return s;
}

OperatorSpec OperatorSpec::pucci_plus(double lambda, double Lambda) {
    OperatorSpec s;
    s.kind = OperatorKind::PucciPlus;
    s.ellipticity = {lambda, Lambda, 0.0, 0.0};
    return s;
}

OperatorSpec OperatorSpec::linear(MatrixCoef A, double lambda, double Lambda) {
    OperatorSpec s;
    s.kind = OperatorKind::LinearVarCoef;
    s.ellipticity = {lambda, Lambda, 0.0, 0.0};
    s.A = std::move(A);
    return s;
}

OperatorSpec OperatorSpec::bellman(std::vector<MatrixCoef> family, double lambda, double Lambda) {
    OperatorSpec s;
    s.kind = OperatorKind::BellmanConvex;
    s.ellipticity = {lambda, Lambda, 0.0, 0.0};
    s.family = std::move(family);
    return s;
}

OperatorSpec OperatorSpec::asymptotically_convex(OperatorSpec base, double kappa, CoefFn rho, CoefFn c, CoefFn b,
                                                 double gamma, double omega) {
    OperatorSpec s;
    s.kind = OperatorKind::AsymptoticallyConvex;
    s.ellipticity = {base.ellipticity.lambda - kappa, base.ellipticity.Lambda + kappa, gamma, omega};
    s.base = std::make_shared<const OperatorSpec>(std::move(base));
    s.kappa = kappa;
    s.rho = std::move(rho);
    s.c = std::move(c);
    s.b = std::move(b);
    return s;
}

void OperatorSpec::validate() const {
    ellipticity.validate();
    switch (kind) {
        case OperatorKind::Trace:
            if (ellipticity.lambda > 1.0 || ellipticity.Lambda < 1.0)
                throw ConfigError("trace operator needs lambda <= 1 <= Lambda", "operator.lambda");
            break;
        case OperatorKind::LinearVarCoef:
            if (!A.xx.fn || !A.xy.fn || !A.yy.fn) throw ConfigError("linear operator needs A", "operator.A");
            break;
        case OperatorKind::BellmanConvex:
            if (family.empty()) throw ConfigError("bellman operator needs at least one matrix", "operator.family");
            for (const auto& a : family)
                if (!a.xx.fn || !a.xy.fn || !a.yy.fn) throw ConfigError("incomplete family matrix", "operator.family");
            break;
        case OperatorKind::PucciMinus:
        case OperatorKind::PucciPlus: break;
        case OperatorKind::AsymptoticallyConvex: {
            if (!base) throw ConfigError("asymptotically convex operator needs a base", "operator.base");
            if (base->kind == OperatorKind::AsymptoticallyConvex || base->kind == OperatorKind::PucciMinus)
                throw ConfigError("base must be a convex kind (trace, linear, pucci_plus, bellman)", "operator.base");
            base->validate();
            if (!(kappa >= 0.0)) throw ConfigError("kappa must be non-negative", "operator.kappa");
            if (!(kappa < base->ellipticity.lambda))
                throw ConfigError("kappa must be below the base lambda to keep F elliptic", "operator.kappa");
            if (ellipticity.lambda > base->ellipticity.lambda - kappa ||
                ellipticity.Lambda < base->ellipticity.Lambda + kappa)
                throw ConfigError("ellipticity must cover the base widened by kappa", "operator.lambda");
            if (!rho.fn || !c.fn || !b.fn) throw ConfigError("missing coefficient", "operator");
            break;
        }
    }
}

const OperatorSpec& OperatorSpec::recession_part() const {
    return kind == OperatorKind::AsymptoticallyConvex && base ? *base : *this;
}

bool OperatorSpec::depends_on_position() const {
    switch (kind) {
        case OperatorKind::Trace:
        case OperatorKind::PucciMinus:
        case OperatorKind::PucciPlus: return false;
        default: return true;
    }
}

double OperatorSpec::perturbation_bound() const noexcept {
    return kind == OperatorKind::AsymptoticallyConvex ? kappa * kPi / 2.0 : 0.0;
}

double eval_operator(const OperatorSpec& spec, const SymMat2& m, Vec2 p, double r, Point x) {
    if (spec.kind != OperatorKind::AsymptoticallyConvex) return convex_at(spec, m, x);
    if (!spec.base) throw ConfigError("asymptotically convex operator needs a base", "operator.base");
    double v = convex_at(*spec.base, m, x);
    if (spec.kappa != 0.0) v += spec.kappa * std::atan(m.frobenius()) * spec.rho(x);
    return v - spec.c(x) * r + spec.b(x) * p.norm();
}

BoundOperator::BoundOperator(const OperatorSpec& spec, const GridHandle& grid) : spec_(spec) {
    spec_.validate();
    const OperatorSpec& conv = spec_.recession_part();
    convex_kind_ = conv.kind;
    convex_ell_ = conv.ellipticity;
    const auto nodes = grid->interior_nodes();
    const std::size_t count = nodes.size();
    if (convex_kind_ == OperatorKind::LinearVarCoef) family_size_ = 1;
    if (convex_kind_ == OperatorKind::BellmanConvex) family_size_ = static_cast<int>(conv.family.size());
    coef_.reserve(count * static_cast<std::size_t>(family_size_));
    for (int node : nodes) {
        const Point x = grid->position(node);
        for (const SymMat2& a : sample_coefficients(conv, x)) {
            check_spectrum(a, conv.ellipticity, x, "A(x)");
            coef_.push_back(a);
        }
    }
    if (spec_.kind != OperatorKind::AsymptoticallyConvex) return;
    rho_.resize(count);
    c_.resize(count);
    b_.resize(count);
    const Ellipticity& e = spec_.ellipticity;
    for (std::size_t k = 0; k < count; ++k) {
        const Point x = grid->position(nodes[k]);
        rho_[k] = spec_.rho(x);
        c_[k] = spec_.c(x);
        b_[k] = spec_.b(x);
        if (std::abs(rho_[k]) > 1.0 + kSpectrumSlack) throw ConfigError("|rho| exceeds 1", "operator.rho");
        if (c_[k] < -kSpectrumSlack || c_[k] > e.omega + kSpectrumSlack)
            throw ConfigError("c leaves [0, omega]", "operator.c");
        if (std::abs(b_[k]) > e.gamma + kSpectrumSlack) throw ConfigError("|b| exceeds gamma", "operator.b");
    }
}

double BoundOperator::convex(int slot, const SymMat2& m) const {
    const SymMat2* coef = family_size_ > 0 ? coef_.data() + static_cast<std::size_t>(slot) * family_size_ : nullptr;
    return convex_value(convex_kind_, convex_ell_, m, coef, family_size_);
}

double BoundOperator::eval(int slot, const SymMat2& m, Vec2 p, double r) const {
    double v = convex(slot, m);
    if (spec_.kind != OperatorKind::AsymptoticallyConvex) return v;
    const auto k = static_cast<std::size_t>(slot);
    if (spec_.kappa != 0.0) v += spec_.kappa * std::atan(m.frobenius()) * rho_[k];
    return v - c_[k] * r + b_[k] * p.norm();
}

std::optional<SymMat2> BoundOperator::linear_coefficient(int slot) const {
    if (spec_.kind == OperatorKind::Trace) return SymMat2::identity();
    if (spec_.kind == OperatorKind::LinearVarCoef) return coef_[static_cast<std::size_t>(slot)];
    return std::nullopt;
}

RecessionResult recession_eval(const OperatorSpec& spec, const SymMat2& m, Point x, const std::vector<double>& mu_list) {
    if (mu_list.empty()) throw ConfigError("empty mu list", "mu_list");
    for (std::size_t i = 0; i < mu_list.size(); ++i) {
        if (!(mu_list[i] > 0.0)) throw ConfigError("mu values must be positive", "mu_list");
        if (i > 0 && !(mu_list[i] < mu_list[i - 1])) throw ConfigError("mu values must decrease", "mu_list");
    }
    if (mu_list.back() > 1e-6) throw ConfigError("last mu must be at most 1e-6", "mu_list");

    RecessionResult out;
    out.trace.reserve(mu_list.size());
    for (double mu : mu_list) out.trace.push_back(mu * eval_operator(spec, m * (1.0 / mu), {}, 0.0, x));
    out.value = out.trace.back();

    const double kb = spec.perturbation_bound();
    const double round = 1e-12 * (1.0 + m.frobenius() * std::max(1.0, spec.ellipticity.Lambda));
    for (std::size_t i = 0; i < mu_list.size(); ++i) {
        for (std::size_t j = i + 1; j < mu_list.size(); ++j) {
            const double gap = std::abs(out.trace[i] - out.trace[j]);
            if (gap > kb * mu_list[i] + round) {
                std::ostringstream msg;
                msg << "recession trace is not Cauchy: |F_mu - F_mu'| = " << gap << " at mu = " << mu_list[i]
                    << ", mu' = " << mu_list[j] << " exceeds " << kb * mu_list[i];
                throw DiagnosticError(msg.str());
            }
        }
    }
    return out;
}

double recession_limit(const OperatorSpec& spec, const SymMat2& m, Point x) {
    return convex_at(spec.recession_part(), m, x);
}

std::string StructureReport::describe() const {
    std::ostringstream out;
    out << violations << " violation(s) in " << samples << " samples, worst relative margin " << worst_margin;
    if (witness) {
        const auto& w = *witness;
        out << "; witness (" << (w.upper ? "upper" : "lower") << " bound): M=[" << w.M.xx << "," << w.M.xy << ","
            << w.M.yy << "] N=[" << w.N.xx << "," << w.N.xy << "," << w.N.yy << "] p=(" << w.p.x << "," << w.p.y
            << ") q=(" << w.q.x << "," << w.q.y << ") r=" << w.r << " s=" << w.s << " x=(" << w.x.x << "," << w.x.y
            << ") margin=" << w.margin;
    }
    return out.str();
}

StructureReport check_structure_condition(const OperatorFunction& F, const Ellipticity& ell, Shape shape,
                                          std::size_t samples, std::uint64_t seed) {
    if (samples < 1) throw ConfigError("need at least one sample", "samples");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> entry(-10.0, 10.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> sym(-1.0, 1.0);

    StructureReport rep;
    rep.samples = samples;
    rep.worst_margin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < samples; ++k) {
        Point x;
        if (shape == Shape::UnitSquare) {
            x = {unit(rng), unit(rng)};
        } else {
            do x = {sym(rng), sym(rng)};
            while (x.dot(x) > 1.0);
        }
        const SymMat2 M = random_symmetric(rng, -10.0, 10.0);
        const SymMat2 N = random_symmetric(rng, -10.0, 10.0);
        const Vec2 p{entry(rng), entry(rng)};
        const Vec2 q{entry(rng), entry(rng)};
        const double r = entry(rng), s = entry(rng);

        const double fm = F(M, p, r, x);
        const double fn = F(N, q, s, x);
        const double diff = fm - fn;
        const SymMat2 X = M - N;
        const double lower_order = ell.gamma * (p - q).norm() + ell.omega * std::abs(r - s);
        const double up = pucci_plus(X, ell) + lower_order;
        const double lo = pucci_minus(X, ell) - lower_order;
        const double scale = 1.0 + std::abs(fm) + std::abs(fn) + std::abs(up) + std::abs(lo);
        const double margin_up = (up - diff) / scale;
        const double margin_lo = (diff - lo) / scale;
        const double margin = std::min(margin_up, margin_lo);
        if (margin < -1e-9) {
            ++rep.violations;
            if (!rep.witness || margin < rep.witness->margin)
                rep.witness = StructureWitness{M, N, p, q, r, s, x, margin, margin_up <= margin_lo};
        }
        rep.worst_margin = std::min(rep.worst_margin, margin);
    }
    return rep;
}

StructureReport check_structure_condition(const OperatorSpec& spec, Shape shape, std::size_t samples,
                                          std::uint64_t seed) {
    spec.validate();
    return check_structure_condition(
        [&spec](const SymMat2& m, Vec2 p, double r, Point x) { return eval_operator(spec, m, p, r, x); },
        spec.ellipticity, shape, samples, seed);
}

BetaEstimate oscillation_beta(const OperatorSpec& spec, Point x, Point x0, std::size_t matrix_samples,
                              const std::vector<double>& scale_list, std::uint64_t seed) {
    const OperatorSpec& conv = spec.recession_part();
    BetaEstimate est;
    if (!conv.depends_on_position() || (x.x == x0.x && x.y == x0.y)) {
        est.exact = 0.0;
        return est;
    }
    const auto cx = sample_coefficients(conv, x);
    const auto c0 = sample_coefficients(conv, x0);
    auto eval_pair = [&](const SymMat2& X) {
        const double a = convex_value(conv.kind, conv.ellipticity, X, cx.data(), static_cast<int>(cx.size()));
        const double b = convex_value(conv.kind, conv.ellipticity, X, c0.data(), static_cast<int>(c0.size()));
        return std::abs(a - b);
    };

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double s : scale_list) {
        auto consider = [&](SymMat2 X) {
            const double nrm = X.frobenius();
            if (nrm == 0.0) return;
            X = X * (s / nrm);
            est.sampled = std::max(est.sampled, eval_pair(X) / (s + 1.0));
        };
        for (std::size_t k = 0; k < matrix_samples; ++k) consider({normal(rng), normal(rng), normal(rng)});
        // Aligned candidates: the coefficient differences themselves.
        for (std::size_t a = 0; a < cx.size(); ++a) {
            consider(cx[a] - c0[a]);
            consider(c0[a] - cx[a]);
        }
    }
    if (conv.kind == OperatorKind::LinearVarCoef) est.exact = (cx[0] - c0[0]).frobenius();
    return est;
}

SmallnessReport check_smallness(const OperatorSpec& spec, const DomainGrid& grid, Point x0, double r, double p,
                                double theta0, double alpha0, std::size_t matrix_samples) {
    if (!(r > 0.0 && r < 1.0)) throw ConfigError("radius must lie in (0, 1)", "smallness.r");
    if (!(p > 2.0)) throw ConfigError("exponent must exceed the dimension 2", "smallness.p");
    const std::vector<double> scales{0.1, 1.0, 10.0, 100.0};
    const auto measures = grid.cell_measures();
    const auto nodes = grid.interior_nodes();
    SmallnessReport rep;
    double weight = 0.0, sum = 0.0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const Point x = grid.position(nodes[k]);
        if ((x - x0).norm() >= r) continue;
        const double beta = oscillation_beta(spec, x, x0, matrix_samples, scales, k + 1).value();
        sum += std::pow(beta, p) * measures[k];
        weight += measures[k];
        ++rep.nodes;
    }
    if (rep.nodes == 0) throw ConfigError("ball B_r(x0) contains no grid node", "smallness.r");
    rep.measured = std::pow(sum / weight, 1.0 / p);
    rep.bound = theta0 * std::pow(r, alpha0);
    rep.passed = rep.measured <= rep.bound;
    return rep;
}

}  // namespace gmsolve
