#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <filesystem>
#include <memory>
#include <sstream>

#include "gmsolve/acceptance.hpp"
#include "gmsolve/config.hpp"
#include "gmsolve/diagnostics.hpp"
#include "gmsolve/driver.hpp"
#include "gmsolve/errors.hpp"
#include "gmsolve/experiment.hpp"
#include "gmsolve/expression.hpp"
#include "gmsolve/field_io.hpp"
#include "gmsolve/frozen_solver.hpp"
#include "gmsolve/nonlocal_source.hpp"
#include "gmsolve/operators.hpp"

namespace py = pybind11;
using namespace gmsolve;

namespace {

using MutableGrid = std::shared_ptr<DomainGrid>;

MutableGrid exposed(const GridHandle& g) {
    return std::const_pointer_cast<DomainGrid>(g);
}

py::object to_python(const nlohmann::json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

SymMat2 to_mat(const std::array<double, 3>& m) {
    return {m[0], m[1], m[2]};
}

py::array_t<double> interior_array(const ScalarField& f) {
    const auto v = f.interior_values();
    py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

py::array_t<double> interior_points(const DomainGrid& g) {
    const auto nodes = g.interior_nodes();
    py::array_t<double> out({static_cast<py::ssize_t>(nodes.size()), py::ssize_t{2}});
    auto a = out.mutable_unchecked<2>();
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const Point p = g.position(nodes[k]);
        a(static_cast<py::ssize_t>(k), 0) = p.x;
        a(static_cast<py::ssize_t>(k), 1) = p.y;
    }
    return out;
}

ScalarField from_expression(const MutableGrid& g, const std::string& text) {
    const Expression e = Expression::parse(text);
    return sample_field(g, [&e](Point p) { return e(p); });
}

ScalarField boundary_from_expression(const MutableGrid& g, const std::string& text) {
    const Expression e = Expression::parse(text);
    return sample_boundary(g, [&e](Point p) { return e(p); });
}

SourceSpec make_source(const std::string& kind, double a, double b, double delta) {
    SourceSpec s;
    if (kind == "affine") {
        s.g = SourceFunction::affine(a, b);
    } else if (kind == "exp_decay") {
        s.g = SourceFunction::exp_decay(a, b);
    } else {
        throw ConfigError("unknown g kind '" + kind + "'", "g");
    }
    s.delta = delta;
    return s;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Native core of gmsolve";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<NonConvergenceError>(m, "NonConvergenceError", PyExc_RuntimeError);
    py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_RuntimeError);
    py::register_exception<DiagnosticError>(m, "DiagnosticError", PyExc_RuntimeError);

    py::class_<DomainGrid, MutableGrid>(m, "Grid")
        .def(py::init([](const std::string& shape, int n) { return exposed(build_grid(parse_shape(shape), n)); }),
             py::arg("shape"), py::arg("n"))
        .def_property_readonly("shape", [](const DomainGrid& g) { return std::string(to_string(g.shape())); })
        .def_property_readonly("n", &DomainGrid::n)
        .def_property_readonly("h", &DomainGrid::h)
        .def_property_readonly("interior_count", &DomainGrid::interior_count)
        .def_property_readonly("total_measure", &DomainGrid::total_measure)
        .def("interior_points", &interior_points);

    py::class_<ScalarField>(m, "Field")
        .def_property_readonly("grid", [](const ScalarField& f) { return exposed(f.grid_handle()); })
        .def("interior_values", &interior_array)
        .def("interior_sup_norm", &ScalarField::interior_sup_norm)
        .def("to_csv",
             [](const ScalarField& f) {
                 std::ostringstream out;
                 write_field_csv(f, out);
                 return out.str();
             })
        .def_static("from_csv",
                    [](const std::string& text) {
                        std::istringstream in(text);
                        return read_field_csv(in);
                    })
        .def("with_interior", [](const ScalarField& f, py::array_t<double, py::array::c_style | py::array::forcecast> v) {
            if (static_cast<std::size_t>(v.size()) != f.grid().interior_count())
                throw ConfigError("expected one value per interior node", "values");
            ScalarField out = f;
            const double* data = v.data();
            for (std::size_t s = 0; s < f.grid().interior_count(); ++s) out.interior(static_cast<int>(s)) = data[s];
            return out;
        });

    m.def("sample", &from_expression, py::arg("grid"), py::arg("expression"),
          "Field with the expression evaluated at every node with data");
    m.def("sample_boundary", &boundary_from_expression, py::arg("grid"), py::arg("expression"),
          "Dirichlet data with the interior filled by the boundary mean");

    py::class_<OperatorSpec>(m, "Operator")
        .def_static("trace", &OperatorSpec::trace)
        .def_static("pucci_minus", &OperatorSpec::pucci_minus, py::arg("lam"), py::arg("Lam"))
        .def_static("pucci_plus", &OperatorSpec::pucci_plus, py::arg("lam"), py::arg("Lam"))
        .def_property_readonly("kind", [](const OperatorSpec& s) { return std::string(to_string(s.kind)); })
        .def("__call__",
             [](const OperatorSpec& s, const std::array<double, 3>& mat, const std::array<double, 2>& p, double r,
                const std::array<double, 2>& x) { return eval_operator(s, to_mat(mat), {p[0], p[1]}, r, {x[0], x[1]}); },
             py::arg("m"), py::arg("p") = std::array<double, 2>{0.0, 0.0}, py::arg("r") = 0.0,
             py::arg("x") = std::array<double, 2>{0.0, 0.0});

    m.def("pucci_minus", [](const std::array<double, 3>& mat, double lam, double Lam) {
        return pucci_minus(to_mat(mat), lam, Lam);
    });
    m.def("pucci_plus", [](const std::array<double, 3>& mat, double lam, double Lam) {
        return pucci_plus(to_mat(mat), lam, Lam);
    });

    m.def(
        "solve_frozen",
        [](const OperatorSpec& spec, const ScalarField& rhs, const ScalarField& psi) {
            const FrozenSolution sol = solve_frozen(spec, rhs, psi);
            return py::make_tuple(sol.u, to_python(to_json(sol.report)));
        },
        py::arg("spec"), py::arg("rhs"), py::arg("psi"), "Returns (u, report)");

    m.def(
        "nonlocal_source",
        [](const ScalarField& u, const std::string& g, double a, double b, double delta) {
            return nonlocal_source(u, make_source(g, a, b, delta));
        },
        py::arg("u"), py::arg("g") = "affine", py::arg("a") = 0.0, py::arg("b") = 1.0, py::arg("delta") = 0.0);

    m.def(
        "superlevel_measure", [](const ScalarField& u, double t) { return build_distribution(u).superlevel(t); },
        py::arg("u"), py::arg("t"));

    m.def(
        "solve_grad_mercier",
        [](const ScalarField& f, const ScalarField& psi, const std::string& g, double a, double b, double delta_min) {
            OuterConfig cfg;
            cfg.delta_min = delta_min;
            const ContinuationResult r =
                delta_continuation(OperatorSpec::trace(), make_source(g, a, b, 0.0), f, psi, cfg);
            return py::make_tuple(r.u, to_python(r.trace.to_json()));
        },
        py::arg("f"), py::arg("psi"), py::arg("g") = "affine", py::arg("a") = 0.0, py::arg("b") = 0.0,
        py::arg("delta_min") = 1e-3, "Laplacian Grad-Mercier problem by delta continuation; returns (u, trace)");

    m.def(
        "radial_oracle",
        [](double a, double b, double f, py::array_t<double, py::array::c_style | py::array::forcecast> r) {
            const RadialProfile prof = radial_oracle(SourceFunction::affine(a, b), [f](double) { return f; });
            py::array_t<double> out(r.size());
            for (py::ssize_t k = 0; k < r.size(); ++k) out.mutable_data()[k] = prof(r.data()[k]);
            return out;
        },
        py::arg("a"), py::arg("b"), py::arg("f"), py::arg("r"),
        "u(r) for g(s) = a + b s and constant f on the unit disk");

    m.def("lp_norm", py::overload_cast<const ScalarField&, double>(&lp_norm), py::arg("v"), py::arg("p"));
    m.def("w2p_norm", &w2p_norm, py::arg("u"), py::arg("p"));
    m.def(
        "pbmo_seminorm", [](const ScalarField& v, double p) { return pbmo_seminorm(v, p); }, py::arg("v"),
        py::arg("p"));
    m.def(
        "holder_gradient", [](const ScalarField& u, double alpha) { return holder_gradient(u, alpha).value; },
        py::arg("u"), py::arg("alpha"));
    m.def(
        "norm_report",
        [](const ScalarField& u, double p, double alpha) { return to_python(to_json(norm_report(u, p, alpha))); },
        py::arg("u"), py::arg("p") = 4.0, py::arg("alpha") = 0.5);

    m.def(
        "run_config",
        [](const std::string& path) {
            std::ostringstream log;
            const ExperimentConfig cfg = load_config(path);
            const auto dir = std::filesystem::path(path).parent_path();
            const RunSummary s = run_experiment(cfg, dir.empty() ? "." : dir.string(), log);
            return py::make_tuple(s.exit_code, s.directory.string());
        },
        py::arg("path"), "Runs a config file; returns (exit_code, output directory)");

    m.def(
        "verify",
        [](const std::vector<int>& criteria) {
            SuiteResult r;
            {
                py::gil_scoped_release release;
                r = verify_suite({}, criteria);
            }
            return to_python(r.to_json());
        },
        py::arg("criteria") = std::vector<int>{}, "Runs acceptance criteria; returns the JSON summary");
}
