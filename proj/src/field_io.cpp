#include "gmsolve/field_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <vector>

#include "gmsolve/errors.hpp"

namespace gmsolve {

namespace {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& text, int line) {
    if (text == "nan" || text.empty()) return std::numeric_limits<double>::quiet_NaN();
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("cannot parse number '" + text + "'", "field csv", line);
    }
}

struct CsvRow {
    double x, y;
    std::string cls;
    double value;
};

}  // namespace

void write_field_csv(const ScalarField& field, std::ostream& out) {
    const DomainGrid& g = field.grid();
    out << "x,y,class,value\n";
    for (std::size_t k = 0; k < g.node_count(); ++k) {
        const int node = static_cast<int>(k);
        const Point p = g.position(node);
        out << format_double(p.x) << ',' << format_double(p.y) << ',' << to_string(g.node_class(node)) << ','
            << format_double(field[node]) << '\n';
    }
    const auto pts = g.boundary_points();
    for (std::size_t k = 0; k < pts.size(); ++k) {
        out << format_double(pts[k].x) << ',' << format_double(pts[k].y) << ",boundary_point,"
            << format_double(field.boundary_values()[k]) << '\n';
    }
}

ScalarField read_field_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("x,y,class,value", 0) != 0)
        throw ConfigError("missing header x,y,class,value", "field csv", 1);
    std::vector<CsvRow> lattice, points;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cx, cy, cls, cv;
        if (!std::getline(ss, cx, ',') || !std::getline(ss, cy, ',') || !std::getline(ss, cls, ','))
            throw ConfigError("expected 4 columns", "field csv", lineno);
        std::getline(ss, cv);
        CsvRow row{parse_double(cx, lineno), parse_double(cy, lineno), cls, parse_double(cv, lineno)};
        (cls == "boundary_point" ? points : lattice).push_back(row);
    }
    const auto side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(lattice.size()))));
    if (side * side != static_cast<int>(lattice.size()) || side < 2)
        throw ConfigError("lattice row count is not a perfect square", "field csv");
    const bool disk = lattice.front().x < -0.5;
    const int n = disk ? (side + 1) / 2 : side;
    GridHandle grid = build_grid(disk ? Shape::UnitDisk : Shape::UnitSquare, n);
    if (static_cast<int>(grid->node_count()) != static_cast<int>(lattice.size()) ||
        grid->boundary_points().size() != points.size())
        throw ConfigError("row counts do not match a " + std::string(disk ? "disk" : "square") + " grid", "field csv");
    ScalarField f(grid);
    for (std::size_t k = 0; k < lattice.size(); ++k) {
        const int node = static_cast<int>(k);
        if (lattice[k].cls != to_string(grid->node_class(node)))
            throw ConfigError("node class mismatch at row " + std::to_string(k + 2), "field csv",
                              static_cast<int>(k + 2));
        f[node] = grid->has_data(node) ? lattice[k].value : std::numeric_limits<double>::quiet_NaN();
    }
    for (std::size_t k = 0; k < points.size(); ++k) f.boundary_values()[k] = points[k].value;
    return f;
}

nlohmann::json field_to_json(const ScalarField& field) {
    const DomainGrid& g = field.grid();
    nlohmann::json j;
    j["shape"] = std::string(to_string(g.shape()));
    j["n"] = g.n();
    j["h"] = g.h();
    auto values = nlohmann::json::array();
    for (double v : field.values()) values.push_back(std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v));
    j["values"] = std::move(values);
    j["boundary_values"] = std::vector<double>(field.boundary_values().begin(), field.boundary_values().end());
    return j;
}

ScalarField field_from_json(const nlohmann::json& j) {
    try {
        GridHandle grid = build_grid(parse_shape(j.at("shape").get<std::string>()), j.at("n").get<int>());
        ScalarField f(grid);
        const auto& values = j.at("values");
        const auto& bvalues = j.at("boundary_values");
        if (values.size() != grid->node_count() || bvalues.size() != grid->boundary_points().size())
            throw ConfigError("value array sizes do not match the grid", "field json");
        for (std::size_t k = 0; k < values.size(); ++k)
            f[static_cast<int>(k)] = values[k].is_null() ? std::numeric_limits<double>::quiet_NaN() : values[k].get<double>();
        for (std::size_t k = 0; k < bvalues.size(); ++k) f.boundary_values()[k] = bvalues[k].get<double>();
        return f;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(e.what(), "field json");
    }
}

void save_field_csv(const ScalarField& field, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    write_field_csv(field, out);
}

ScalarField load_field_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    return read_field_csv(in);
}

}  // namespace gmsolve
