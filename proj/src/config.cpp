#include "gmsolve/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "gmsolve/errors.hpp"
#include "gmsolve/expression.hpp"

namespace gmsolve {

namespace {

struct Value {
    enum class Type { Number, Bool, String, Array };
    Type type = Type::Number;
    double number = 0.0;
    bool integral = false;
    bool boolean = false;
    std::string text;
    std::vector<Value> items;
};

struct Entry {
    Value value;
    int line = 0;
    bool used = false;
};

using Document = std::map<std::string, Entry>;

std::string trim(std::string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

bool is_bare_key(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
    return true;
}

class LineParser {
public:
    LineParser(std::string_view text, int line, std::string key) : s_(text), line_(line), key_(std::move(key)) {}

    Value parse_value() {
        skip_space();
        if (pos_ >= s_.size()) fail("missing value");
        const char c = s_[pos_];
        if (c == '"') return parse_string();
        if (c == '[') return parse_array();
        if (s_.substr(pos_, 4) == "true") { pos_ += 4; return boolean(true); }
        if (s_.substr(pos_, 5) == "false") { pos_ += 5; return boolean(false); }
        return parse_number();
    }

    void expect_end() {
        skip_space();
        if (pos_ < s_.size() && s_[pos_] != '#') fail("unexpected text after value: '" + std::string(s_.substr(pos_)) + "'");
    }

private:
    [[noreturn]] void fail(const std::string& what) const { throw ConfigError(what, key_, line_); }

    void skip_space() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
    }

    static Value boolean(bool b) {
        Value v;
        v.type = Value::Type::Bool;
        v.boolean = b;
        return v;
    }

    Value parse_string() {
        ++pos_;
        Value v;
        v.type = Value::Type::String;
        while (pos_ < s_.size() && s_[pos_] != '"') {
            char c = s_[pos_++];
            if (c == '\\') {
                if (pos_ >= s_.size()) fail("unterminated escape");
                const char e = s_[pos_++];
                switch (e) {
                    case '"': c = '"'; break;
                    case '\\': c = '\\'; break;
                    case 'n': c = '\n'; break;
                    case 't': c = '\t'; break;
                    default: fail(std::string("unknown escape \\") + e);
                }
            }
            v.text.push_back(c);
        }
        if (pos_ >= s_.size()) fail("unterminated string");
        ++pos_;
        return v;
    }

    Value parse_number() {
        const std::string rest(s_.substr(pos_));
        const char* begin = rest.c_str();
        char* end = nullptr;
        errno = 0;
        const double d = std::strtod(begin, &end);
        if (end == begin) fail("expected a number, string, boolean or array");
        if (errno == ERANGE || !std::isfinite(d)) fail("number out of range");
        const std::string token(begin, static_cast<std::size_t>(end - begin));
        if (token.find_first_of("xXpP") != std::string::npos || token.find("nan") != std::string::npos ||
            token.find("inf") != std::string::npos)
            fail("unsupported number '" + token + "'");
        Value v;
        v.number = d;
        v.integral = token.find_first_of(".eE") == std::string::npos;
        pos_ += token.size();
        return v;
    }

    Value parse_array() {
        ++pos_;
        Value v;
        v.type = Value::Type::Array;
        skip_space();
        if (pos_ < s_.size() && s_[pos_] == ']') {
            ++pos_;
            return v;
        }
        for (;;) {
            skip_space();
            if (pos_ < s_.size() && s_[pos_] == '[') fail("nested arrays are not supported");
            v.items.push_back(parse_value());
            if (v.items.back().type != v.items.front().type) fail("mixed types in array");
            skip_space();
            if (pos_ >= s_.size()) fail("unterminated array");
            if (s_[pos_] == ']') {
                ++pos_;
                return v;
            }
            if (s_[pos_] != ',') fail("expected ',' or ']' in array");
            ++pos_;
        }
    }

    std::string_view s_;
    std::size_t pos_ = 0;
    int line_;
    std::string key_;
};

Document parse_document(std::string_view text) {
    Document doc;
    std::string section;
    int lineno = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto nl = text.find('\n', start);
        const auto raw = text.substr(start, nl == std::string_view::npos ? text.size() - start : nl - start);
        start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++lineno;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        if (line[0] == '[') {
            const auto close = line.find(']');
            if (close == std::string::npos) throw ConfigError("unterminated section header", "", lineno);
            const std::string name = trim(std::string_view(line).substr(1, close - 1));
            if (!is_bare_key(name)) throw ConfigError("bad section name '" + name + "'", "", lineno);
            const std::string after = trim(std::string_view(line).substr(close + 1));
            if (!after.empty() && after[0] != '#') throw ConfigError("unexpected text after section header", name, lineno);
            static const char* const known[] = {"domain", "operator", "source", "data", "solver", "diagnostics", "output"};
            if (std::find(std::begin(known), std::end(known), name) == std::end(known))
                throw ConfigError("unknown section [" + name + "]", name, lineno);
            section = name;
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("expected key = value", section, lineno);
        const std::string key = trim(std::string_view(line).substr(0, eq));
        if (!is_bare_key(key)) throw ConfigError("bad key '" + key + "'", section, lineno);
        const std::string full = section.empty() ? key : section + "." + key;
        LineParser lp(std::string_view(line).substr(eq + 1), lineno, full);
        Entry entry;
        entry.value = lp.parse_value();
        entry.line = lineno;
        lp.expect_end();
        if (!doc.emplace(full, std::move(entry)).second) throw ConfigError("duplicate key", full, lineno);
    }
    return doc;
}

class Reader {
public:
    explicit Reader(Document doc) : doc_(std::move(doc)) {}

    Entry* find(const std::string& key) {
        const auto it = doc_.find(key);
        if (it == doc_.end()) return nullptr;
        it->second.used = true;
        return &it->second;
    }

    [[noreturn]] static void fail(const Entry& e, const std::string& key, const std::string& what) {
        throw ConfigError(what, key, e.line);
    }

    void number(const std::string& key, double& out) {
        if (Entry* e = find(key)) out = as_number(*e, key);
    }
    void number(const std::string& key, std::optional<double>& out) {
        if (Entry* e = find(key)) out = as_number(*e, key);
    }
    void integer(const std::string& key, int& out) {
        if (Entry* e = find(key)) out = as_int(*e, key);
    }
    void seed(const std::string& key, std::uint64_t& out) {
        if (Entry* e = find(key)) {
            const int v = as_int(*e, key);
            if (v < 0) fail(*e, key, "must be non-negative");
            out = static_cast<std::uint64_t>(v);
        }
    }
    void boolean(const std::string& key, bool& out) {
        if (Entry* e = find(key)) {
            if (e->value.type != Value::Type::Bool) fail(*e, key, "expected true or false");
            out = e->value.boolean;
        }
    }
    void string(const std::string& key, std::string& out) {
        if (Entry* e = find(key)) out = as_string(e->value, *e, key);
    }
    void strings(const std::string& key, std::vector<std::string>& out) {
        if (Entry* e = find(key)) {
            if (e->value.type != Value::Type::Array) fail(*e, key, "expected an array of strings");
            out.clear();
            for (const Value& v : e->value.items) out.push_back(as_string(v, *e, key));
        }
    }
    void numbers(const std::string& key, std::vector<double>& out) {
        if (Entry* e = find(key)) {
            if (e->value.type != Value::Type::Array) fail(*e, key, "expected an array of numbers");
            out.clear();
            for (const Value& v : e->value.items) {
                if (v.type != Value::Type::Number) fail(*e, key, "expected an array of numbers");
                out.push_back(v.number);
            }
        }
    }
    /// A single integer or an array of integers.
    void integers(const std::string& key, std::vector<int>& out) {
        if (Entry* e = find(key)) {
            out.clear();
            if (e->value.type == Value::Type::Array) {
                if (e->value.items.empty()) fail(*e, key, "expected at least one value");
                for (const Value& v : e->value.items) out.push_back(int_of(v, *e, key));
            } else {
                out.push_back(as_int(*e, key));
            }
        }
    }

    int line_of(const std::string& key) const {
        const auto it = doc_.find(key);
        return it == doc_.end() ? 0 : it->second.line;
    }

    void reject_unused() const {
        for (const auto& [key, e] : doc_)
            if (!e.used) throw ConfigError("unknown key", key, e.line);
    }

private:
    static double as_number(const Entry& e, const std::string& key) {
        if (e.value.type != Value::Type::Number) fail(e, key, "expected a number");
        return e.value.number;
    }
    static int int_of(const Value& v, const Entry& e, const std::string& key) {
        if (v.type != Value::Type::Number || !v.integral) fail(e, key, "expected an integer");
        if (std::abs(v.number) > 2e9) fail(e, key, "integer out of range");
        return static_cast<int>(v.number);
    }
    static int as_int(const Entry& e, const std::string& key) { return int_of(e.value, e, key); }
    static std::string as_string(const Value& v, const Entry& e, const std::string& key) {
        if (v.type != Value::Type::String) fail(e, key, "expected a string");
        return v.text;
    }

    Document doc_;
};

void require(bool ok, const Reader& r, const std::string& key, const std::string& what) {
    if (!ok) throw ConfigError(what, key, r.line_of(key));
}

void require_one_of(const std::string& value, std::initializer_list<const char*> options, const Reader& r,
                    const std::string& key) {
    std::string list;
    for (const char* o : options) {
        if (value == o) return;
        list += list.empty() ? o : std::string(", ") + o;
    }
    throw ConfigError("'" + value + "' is not one of " + list, key, r.line_of(key));
}

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default: out.push_back(c);
        }
    }
    return out + "\"";
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    std::string s = buf;
    if (s.find_first_of(".eE") == std::string::npos) s += ".0";
    return s;
}

template <class T, class F>
std::string array(const std::vector<T>& items, F fmt) {
    std::string out = "[";
    for (std::size_t k = 0; k < items.size(); ++k) out += (k ? ", " : "") + fmt(items[k]);
    return out + "]";
}

void parse_triple(const std::string& text, const std::string& field, MatrixCoef& out) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ';')) parts.push_back(trim(part));
    if (parts.size() != 3) throw ConfigError("family member needs 'xx; xy; yy', got '" + text + "'", field);
    out.xx = CoefFn::parse(parts[0], field);
    out.xy = CoefFn::parse(parts[1], field);
    out.yy = CoefFn::parse(parts[2], field);
}

OperatorSpec build_convex(const std::string& kind_text, const OperatorConfig& c, const std::string& field) {
    OperatorKind kind{};
    try {
        kind = parse_operator_kind(kind_text);
    } catch (const ConfigError& e) {
        throw ConfigError(e.detail(), field);
    }
    switch (kind) {
        case OperatorKind::Trace: return OperatorSpec::trace();
        case OperatorKind::PucciMinus: return OperatorSpec::pucci_minus(c.lambda, c.Lambda);
        case OperatorKind::PucciPlus: return OperatorSpec::pucci_plus(c.lambda, c.Lambda);
        case OperatorKind::LinearVarCoef: {
            MatrixCoef a;
            a.xx = CoefFn::parse(c.a_xx, "operator.a_xx");
            a.xy = CoefFn::parse(c.a_xy, "operator.a_xy");
            a.yy = CoefFn::parse(c.a_yy, "operator.a_yy");
            return OperatorSpec::linear(a, c.lambda, c.Lambda);
        }
        case OperatorKind::BellmanConvex: {
            if (c.family.empty()) throw ConfigError("bellman needs a non-empty family", "operator.family");
            std::vector<MatrixCoef> fam(c.family.size());
            for (std::size_t k = 0; k < fam.size(); ++k) parse_triple(c.family[k], "operator.family", fam[k]);
            return OperatorSpec::bellman(std::move(fam), c.lambda, c.Lambda);
        }
        case OperatorKind::AsymptoticallyConvex:
            throw ConfigError("base of asymptotically_convex must be a convex kind", field);
    }
    throw ConfigError("unknown operator kind", field);
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
    Reader r(parse_document(text));
    ExperimentConfig c;
    r.string("name", c.name);
    r.seed("seed", c.seed);

    std::string shape = "square";
    r.string("domain.shape", shape);
    try {
        c.domain.shape = parse_shape(shape);
    } catch (const Error& e) {
        throw ConfigError("unknown shape '" + shape + "'", "domain.shape", r.line_of("domain.shape"));
    }
    r.integers("domain.n", c.domain.n);
    for (int n : c.domain.n) require(n >= 8, r, "domain.n", "grid size n = " + std::to_string(n) + " violates n >= 8");

    OperatorConfig& o = c.op;
    r.string("operator.kind", o.kind);
    r.string("operator.base", o.base);
    r.number("operator.lambda", o.lambda);
    r.number("operator.Lambda", o.Lambda);
    r.number("operator.gamma", o.gamma);
    r.number("operator.omega", o.omega);
    r.string("operator.a_xx", o.a_xx);
    r.string("operator.a_xy", o.a_xy);
    r.string("operator.a_yy", o.a_yy);
    r.strings("operator.family", o.family);
    r.number("operator.kappa", o.kappa);
    r.string("operator.rho", o.rho);
    r.string("operator.c", o.c);
    r.string("operator.b", o.b);

    SourceConfig& s = c.source;
    r.string("source.kind", s.kind);
    require_one_of(s.kind, {"none", "grad_mercier"}, r, "source.kind");
    r.string("source.g", s.g);
    require_one_of(s.g, {"affine", "exp_decay", "table"}, r, "source.g");
    r.number("source.a", s.a);
    r.number("source.b", s.b);
    r.string("source.table", s.table);
    require(s.g != "table" || !s.table.empty(), r, "source.g", "g = table needs source.table");
    r.number("source.delta0", s.delta0);
    r.number("source.delta_min", s.delta_min);
    require(s.delta_min > 0.0, r, "source.delta_min", "must be positive");
    require(!s.delta0 || *s.delta0 >= s.delta_min, r, "source.delta0", "must be at least delta_min");
    r.boolean("source.rescale", s.rescale);

    r.string("data.f", c.data.f);
    r.string("data.psi", c.data.psi);
    r.string("data.f_csv", c.data.f_csv);
    r.string("data.psi_csv", c.data.psi_csv);
    r.string("data.exact", c.data.exact);

    SolverConfig& v = c.solver;
    r.number("solver.tau", v.tau);
    require(!v.tau || *v.tau > 0.0, r, "solver.tau", "must be positive");
    r.number("solver.tol_residual", v.tol_residual);
    require(!v.tol_residual || *v.tol_residual > 0.0, r, "solver.tol_residual", "must be positive");
    r.integer("solver.max_iters", v.max_iters);
    require(v.max_iters > 0, r, "solver.max_iters", "must be positive");
    r.string("solver.scheme", v.scheme);
    require_one_of(v.scheme, {"eigen", "wide"}, r, "solver.scheme");
    r.integer("solver.directions", v.directions);
    require(v.directions >= 2, r, "solver.directions", "needs at least two directions");
    r.integer("solver.arm", v.arm);
    require(v.arm >= 0, r, "solver.arm", "must be non-negative");
    r.boolean("solver.momentum", v.momentum);
    r.number("solver.theta", v.theta);
    require(v.theta > 0.0 && v.theta <= 1.0, r, "solver.theta", "must lie in (0, 1]");
    r.number("solver.tol_outer", v.tol_outer);
    require(!v.tol_outer || *v.tol_outer > 0.0, r, "solver.tol_outer", "must be positive");
    r.integer("solver.max_outer", v.max_outer);
    require(v.max_outer > 0, r, "solver.max_outer", "must be positive");

    DiagnosticsConfig& d = c.diagnostics;
    r.number("diagnostics.p", d.p);
    require(d.p > 2.0, r, "diagnostics.p", "must exceed 2");
    r.number("diagnostics.alpha", d.alpha);
    require(d.alpha > 0.0 && d.alpha <= 1.0, r, "diagnostics.alpha", "must lie in (0, 1]");
    r.numbers("diagnostics.radii", d.radii);
    for (double rho : d.radii) require(rho > 0.0, r, "diagnostics.radii", "radii must be positive");
    r.string("diagnostics.oracle", d.oracle);
    require_one_of(d.oracle, {"none", "radial"}, r, "diagnostics.oracle");
    r.number("diagnostics.oracle_constant", d.oracle_constant);
    require(d.oracle_constant > 0.0, r, "diagnostics.oracle_constant", "must be positive");

    r.string("output.directory", c.output.directory);
    r.strings("output.formats", c.output.formats);
    for (const auto& f : c.output.formats) require_one_of(f, {"csv", "json"}, r, "output.formats");

    r.reject_unused();
    // Builds once so kind tags and expressions fail at parse time with context.
    try {
        build_operator(c.op);
        Expression::parse(c.data.f, "data.f");
        Expression::parse(c.data.psi, "data.psi");
        if (!c.data.exact.empty()) Expression::parse(c.data.exact, "data.exact");
    } catch (const ConfigError& e) {
        throw ConfigError(e.detail(), e.field(), r.line_of(e.field()));
    }
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& c) {
    std::ostringstream out;
    auto str = [](const std::string& s) { return quote(s); };
    out << "name = " << quote(c.name) << "\n";
    out << "seed = " << c.seed << "\n\n";
    out << "[domain]\nshape = " << quote(c.domain.shape == Shape::UnitDisk ? "disk" : "square") << "\n";
    out << "n = " << array(c.domain.n, [](int n) { return std::to_string(n); }) << "\n\n";
    const OperatorConfig& o = c.op;
    out << "[operator]\nkind = " << quote(o.kind) << "\nbase = " << quote(o.base) << "\nlambda = " << num(o.lambda)
        << "\nLambda = " << num(o.Lambda) << "\ngamma = " << num(o.gamma) << "\nomega = " << num(o.omega)
        << "\na_xx = " << quote(o.a_xx) << "\na_xy = " << quote(o.a_xy) << "\na_yy = " << quote(o.a_yy)
        << "\nfamily = " << array(o.family, str) << "\nkappa = " << num(o.kappa) << "\nrho = " << quote(o.rho)
        << "\nc = " << quote(o.c) << "\nb = " << quote(o.b) << "\n\n";
    const SourceConfig& s = c.source;
    out << "[source]\nkind = " << quote(s.kind) << "\ng = " << quote(s.g) << "\na = " << num(s.a)
        << "\nb = " << num(s.b) << "\ntable = " << quote(s.table) << "\n";
    if (s.delta0) out << "delta0 = " << num(*s.delta0) << "\n";
    out << "delta_min = " << num(s.delta_min) << "\nrescale = " << (s.rescale ? "true" : "false") << "\n\n";
    const DataConfig& d = c.data;
    out << "[data]\nf = " << quote(d.f) << "\npsi = " << quote(d.psi) << "\nf_csv = " << quote(d.f_csv)
        << "\npsi_csv = " << quote(d.psi_csv) << "\nexact = " << quote(d.exact) << "\n\n";
    const SolverConfig& v = c.solver;
    out << "[solver]\n";
    if (v.tau) out << "tau = " << num(*v.tau) << "\n";
    if (v.tol_residual) out << "tol_residual = " << num(*v.tol_residual) << "\n";
    out << "max_iters = " << v.max_iters << "\nscheme = " << quote(v.scheme) << "\ndirections = " << v.directions
        << "\narm = " << v.arm << "\nmomentum = " << (v.momentum ? "true" : "false") << "\ntheta = " << num(v.theta)
        << "\n";
    if (v.tol_outer) out << "tol_outer = " << num(*v.tol_outer) << "\n";
    out << "max_outer = " << v.max_outer << "\n\n";
    const DiagnosticsConfig& g = c.diagnostics;
    out << "[diagnostics]\np = " << num(g.p) << "\nalpha = " << num(g.alpha) << "\nradii = " << array(g.radii, num)
        << "\noracle = " << quote(g.oracle) << "\noracle_constant = " << num(g.oracle_constant) << "\n\n";
    out << "[output]\ndirectory = " << quote(c.output.directory) << "\nformats = " << array(c.output.formats, str)
        << "\n";
    return out.str();
}

OperatorSpec build_operator(const OperatorConfig& c) {
    OperatorKind kind{};
    try {
        kind = parse_operator_kind(c.kind);
    } catch (const ConfigError& e) {
        throw ConfigError(e.detail(), "operator.kind");
    }
    OperatorSpec spec;
    if (kind == OperatorKind::AsymptoticallyConvex) {
        spec = OperatorSpec::asymptotically_convex(build_convex(c.base, c, "operator.base"), c.kappa,
                                                   CoefFn::parse(c.rho, "operator.rho"),
                                                   CoefFn::parse(c.c, "operator.c"),
                                                   CoefFn::parse(c.b, "operator.b"), c.gamma, c.omega);
    } else {
        spec = build_convex(c.kind, c, "operator.kind");
        spec.ellipticity.gamma = c.gamma;
        spec.ellipticity.omega = c.omega;
    }
    spec.validate();
    return spec;
}

SourceSpec build_source(const SourceConfig& c, const std::string& base_dir) {
    SourceSpec src;
    if (c.g == "affine") {
        src.g = SourceFunction::affine(c.a, c.b);
    } else if (c.g == "exp_decay") {
        src.g = SourceFunction::exp_decay(c.a, c.b);
    } else if (c.g == "table") {
        std::filesystem::path p(c.table);
        if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
        if (!std::filesystem::exists(p)) throw ConfigError("table file '" + p.string() + "' does not exist", "source.table");
        src.g = SourceFunction::load_csv(p.string());
    } else {
        throw ConfigError("unknown g kind '" + c.g + "'", "source.g");
    }
    src.rescale = c.rescale;
    src.delta = c.delta_min;
    return src;
}

FrozenConfig build_frozen(const SolverConfig& c) {
    FrozenConfig f;
    f.tau = c.tau;
    f.tol_residual = c.tol_residual;
    f.max_iters = c.max_iters;
    f.scheme = c.scheme == "wide" ? Scheme::wide(c.directions, c.arm) : Scheme::eigen();
    f.momentum = c.momentum;
    return f;
}

OuterConfig build_outer(const ExperimentConfig& c) {
    OuterConfig o;
    o.theta = c.solver.theta;
    o.tol_outer = c.solver.tol_outer;
    o.max_outer = c.solver.max_outer;
    o.delta0 = c.source.delta0;
    o.delta_min = c.source.delta_min;
    o.frozen = build_frozen(c.solver);
    return o;
}

}  // namespace gmsolve
