#include "gmsolve/experiment.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "gmsolve/diagnostics.hpp"
#include "gmsolve/errors.hpp"
#include "gmsolve/expression.hpp"
#include "gmsolve/field_io.hpp"

namespace gmsolve {

namespace fs = std::filesystem;

namespace {

bool wants(const ExperimentConfig& cfg, const char* format) {
    for (const auto& f : cfg.output.formats)
        if (f == format) return true;
    return false;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    out << j.dump(2) << "\n";
}

double sup_error(const ScalarField& u, const Expression& exact) {
    double err = 0.0;
    for (int node : u.grid().interior_nodes()) err = std::max(err, std::abs(u[node] - exact(u.grid().position(node))));
    return err;
}

nlohmann::json error_json(const Error& e) {
    nlohmann::json j{{"error", e.what()}};
    if (const auto* nc = dynamic_cast<const NonConvergenceError*>(&e)) j["history_length"] = nc->history().size();
    if (const auto* dv = dynamic_cast<const DivergenceError*>(&e)) j["history_length"] = dv->history().size();
    return j;
}

void write_history(const fs::path& path, const std::vector<double>& history) {
    std::ofstream out(path);
    out << "iter,residual\n" << std::setprecision(17);
    for (std::size_t k = 0; k < history.size(); ++k) out << k << "," << history[k] << "\n";
}

}  // namespace

fs::path output_root() {
    const char* env = std::getenv("GMSOLVE_OUTPUT_ROOT");
    return env && *env ? fs::path(env) : fs::current_path();
}

OracleRow compare_radial(const ScalarField& u, const RadialProfile& oracle, double delta_min, double constant) {
    const DomainGrid& g = u.grid();
    OracleRow row;
    row.n = g.n();
    row.h = g.h();
    row.delta_min = delta_min;
    for (int node : g.interior_nodes())
        row.error = std::max(row.error, std::abs(u[node] - oracle(g.position(node).norm())));
    const double scale = row.h * row.h + delta_min;
    row.measured_constant = row.error / scale;
    row.bound = constant * scale;
    row.passed = row.error <= row.bound;
    return row;
}

ScalarField load_data(const GridHandle& grid, const std::string& expr, const std::string& csv,
                      const std::string& field, const std::string& base_dir) {
    if (csv.empty()) {
        const Expression e = Expression::parse(expr, field);
        return sample_field(grid, [&](Point p) { return e(p); });
    }
    fs::path path(csv);
    if (path.is_relative()) path = fs::path(base_dir) / path;
    if (!fs::exists(path)) throw ConfigError("file '" + path.string() + "' does not exist", field + "_csv");
    const ScalarField loaded = load_field_csv(path.string());
    if (loaded.grid().shape() != grid->shape() || loaded.grid().n() != grid->n())
        throw ConfigError("field '" + path.string() + "' was sampled on a different grid", field + "_csv");
    ScalarField out(grid);
    std::copy(loaded.values().begin(), loaded.values().end(), out.values().begin());
    std::copy(loaded.boundary_values().begin(), loaded.boundary_values().end(), out.boundary_values().begin());
    return out;
}

RadialProfile radial_oracle_for(const ExperimentConfig& cfg) {
    if (cfg.domain.shape != Shape::UnitDisk) throw ConfigError("the radial oracle needs the disk", "domain.shape");
    if (cfg.source.kind != "grad_mercier") throw ConfigError("the radial oracle needs source.kind = grad_mercier", "source.kind");
    if (!cfg.data.f_csv.empty()) throw ConfigError("the radial oracle needs f as an expression", "data.f");
    if (cfg.op.kind != "trace") throw ConfigError("the radial oracle needs the trace operator", "operator.kind");
    const Expression psi = Expression::parse(cfg.data.psi, "data.psi");
    for (int k = 0; k < 64; ++k) {
        const double t = 2.0 * kPi * k / 64.0;
        if (psi({std::cos(t), std::sin(t)}) != 0.0) throw ConfigError("the radial oracle needs psi = 0", "data.psi");
    }
    const Expression f = Expression::parse(cfg.data.f, "data.f");
    SourceSpec src = build_source(cfg.source);
    return radial_oracle(src.g, [&](double r) { return f({r, 0.0}); });
}

void write_error_table(const std::vector<ErrorRow>& rows, std::ostream& out) {
    out << "n,h,error,ratio\n" << std::setprecision(10);
    for (const ErrorRow& r : rows) {
        out << r.n << "," << r.h << "," << r.error << ",";
        if (r.ratio) out << *r.ratio;
        out << "\n";
    }
}

void write_oracle_table(const std::vector<OracleRow>& rows, std::ostream& out) {
    out << "n,h,delta_min,error,measured_constant,bound,passed\n" << std::setprecision(10);
    for (const OracleRow& r : rows)
        out << r.n << "," << r.h << "," << r.delta_min << "," << r.error << "," << r.measured_constant << ","
            << r.bound << "," << (r.passed ? "true" : "false") << "\n";
}

RunSummary run_experiment(const ExperimentConfig& cfg, const std::string& base_dir, std::ostream& log) {
    RunSummary summary;
    summary.directory = output_root() / cfg.output.directory / cfg.name;
    fs::create_directories(summary.directory);

    const OperatorSpec spec = build_operator(cfg.op);
    spec.validate();
    const bool gm = cfg.source.kind == "grad_mercier";
    const SourceSpec src = build_source(cfg.source, base_dir);
    std::optional<Expression> exact;
    if (!cfg.data.exact.empty()) exact = Expression::parse(cfg.data.exact, "data.exact");
    std::optional<RadialProfile> oracle;
    if (cfg.diagnostics.oracle == "radial") oracle = radial_oracle_for(cfg);
    const bool csv = wants(cfg, "csv"), json = wants(cfg, "json");

    auto fail = [&](const std::string& msg) {
        summary.exit_code = ExitFailure;
        summary.messages.push_back(msg);
        log << "FAIL " << msg << "\n";
    };

    for (int n : cfg.domain.n) {
        const GridHandle grid = build_grid(cfg.domain.shape, n);
        const ScalarField f = load_data(grid, cfg.data.f, cfg.data.f_csv, "data.f", base_dir);
        const ScalarField psi = load_data(grid, cfg.data.psi, cfg.data.psi_csv, "data.psi", base_dir);
        const fs::path dir = summary.directory / ("n" + std::to_string(n));
        fs::create_directories(dir);

        ScalarField u;
        SolveReport report;
        std::optional<ContinuationTrace> trace;
        std::optional<ScalarField> g_u;
        try {
            if (gm) {
                ContinuationResult res = delta_continuation(spec, src, f, psi, build_outer(cfg));
                SourceSpec at_zero = src;
                at_zero.delta = 0.0;
                g_u = nonlocal_source(res.u, at_zero);
                u = std::move(res.u);
                report = std::move(res.last_inner);
                trace = std::move(res.trace);
                log << "n=" << n << " continuation levels " << trace->deltas.size() << " self residual "
                    << res.self_residual << " (tol_outer " << res.tol_outer << ")\n";
                for (const auto& w : trace->warnings) log << "warning: " << w << "\n";
            } else {
                FrozenSolution sol = solve_frozen(spec, f, psi, build_frozen(cfg.solver));
                u = std::move(sol.u);
                report = std::move(sol.report);
                log << "n=" << n << " iterations " << report.iters << " residual " << report.final_residual << "\n";
            }
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            if (json) write_json(dir / "error.json", error_json(e));
            if (const auto* nc = dynamic_cast<const NonConvergenceError*>(&e)) write_history(dir / "residual.csv", nc->history());
            if (const auto* dv = dynamic_cast<const DivergenceError*>(&e)) write_history(dir / "residual.csv", dv->history());
            fail("n=" + std::to_string(n) + ": " + e.what());
            break;
        }

        if (!report.abp.passed) fail("n=" + std::to_string(n) + ": ABP check failed");
        NormReport norms = norm_report(u, cfg.diagnostics.p, cfg.diagnostics.alpha, cfg.diagnostics.radii);
        if (g_u) norms.apriori = apriori_ratios(u, psi, f, *g_u, cfg.diagnostics.p, cfg.diagnostics.radii);

        if (csv) {
            save_field_csv(u, (dir / "u.csv").string());
            std::ofstream res_out(dir / "residual.csv");
            write_residual_csv(report, res_out);
            if (trace) {
                std::ofstream tr(dir / "trace.csv");
                trace->write_csv(tr);
            }
        }
        if (json) {
            write_json(dir / "report.json", to_json(report));
            write_json(dir / "norms.json", to_json(norms));
            if (trace) write_json(dir / "trace.json", trace->to_json());
        }

        if (exact) {
            ErrorRow row{n, grid->h(), sup_error(u, *exact), std::nullopt};
            if (!summary.errors.empty() && row.error > 0.0) row.ratio = summary.errors.back().error / row.error;
            summary.errors.push_back(row);
        }
        if (oracle) {
            const OracleRow row = compare_radial(u, *oracle, cfg.source.delta_min, cfg.diagnostics.oracle_constant);
            summary.oracle.push_back(row);
            if (!row.passed) fail("n=" + std::to_string(n) + ": oracle error above bound");
        }
    }

    if (!summary.errors.empty()) {
        log << "error table\n";
        write_error_table(summary.errors, log);
        if (csv) {
            std::ofstream out(summary.directory / "errors.csv");
            write_error_table(summary.errors, out);
        }
    }
    if (!summary.oracle.empty()) {
        log << "oracle comparison\n";
        write_oracle_table(summary.oracle, log);
        if (csv) {
            std::ofstream out(summary.directory / "oracle.csv");
            write_oracle_table(summary.oracle, out);
        }
    }
    if (json)
        write_json(summary.directory / "summary.json",
                   {{"name", cfg.name}, {"exit_code", summary.exit_code}, {"messages", summary.messages}});
    return summary;
}

}  // namespace gmsolve
