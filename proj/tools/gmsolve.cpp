#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "CLI11.hpp"

#include "gmsolve/acceptance.hpp"
#include "gmsolve/config.hpp"
#include "gmsolve/diagnostics.hpp"
#include "gmsolve/errors.hpp"
#include "gmsolve/experiment.hpp"
#include "gmsolve/field_io.hpp"

namespace fs = std::filesystem;
using namespace gmsolve;

namespace {

std::string parent_of(const std::string& path) {
    const fs::path p = fs::path(path).parent_path();
    return p.empty() ? "." : p.string();
}

int cmd_solve(const std::string& path) {
    const ExperimentConfig cfg = load_config(path);
    const RunSummary s = run_experiment(cfg, parent_of(path), std::cout);
    std::cout << "artifacts in " << s.directory.string() << "\n";
    return s.exit_code;
}

int cmd_verify(const SuiteHooks& hooks, const std::vector<int>& only, unsigned workers) {
    const SuiteResult suite = verify_suite(hooks, only, workers);
    suite.write_table(std::cout);
    const fs::path dir = output_root() / "verify";
    fs::create_directories(dir);
    std::ofstream(dir / "summary.json") << suite.to_json().dump(2) << "\n";
    if (!suite.passed()) {
        std::cout << "failing criteria:";
        for (int id : suite.failing()) std::cout << " " << id;
        std::cout << "\n";
        return ExitFailure;
    }
    std::cout << "all " << suite.criteria.size() << " criteria passed\n";
    return ExitPass;
}

int cmd_norms(const std::string& path, double p, double alpha, const std::vector<double>& radii) {
    if (!fs::exists(path)) throw ConfigError("file '" + path + "' does not exist", "field");
    const ScalarField u = load_field_csv(path);
    std::cout << to_json(norm_report(u, p, alpha, radii)).dump(2) << "\n";
    return ExitPass;
}

int cmd_oracle(const std::string& path, int points) {
    const RadialProfile prof = radial_oracle_for(load_config(path));
    std::cout << "r,u,du\n" << std::setprecision(17);
    for (int k = 0; k < points; ++k) {
        const double r = static_cast<double>(k) / (points - 1);
        std::cout << r << "," << prof(r) << "," << prof.slope(r) << "\n";
    }
    return ExitPass;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Grad-Mercier and fully nonlinear elliptic solver"};
    app.require_subcommand(1);

    std::string config_path, field_path;
    double p = 4.0, alpha = 0.5;
    std::vector<double> radii;
    SuiteHooks hooks;
    std::vector<int> only;
    unsigned workers = 0;
    int points = 101;

    auto* solve = app.add_subcommand("solve", "run the experiment described by a config file");
    solve->add_option("config", config_path, "config file")->required();

    auto* verify = app.add_subcommand("verify", "run the acceptance suite");
    verify->add_option("--tau-scale", hooks.tau_scale, "multiply every pseudo-time step (fault injection)");
    verify->add_flag("--flip-ties", hooks.flip_ties, "count ties out of superlevel sets (fault injection)");
    verify->add_option("--criteria", only, "run only these criteria")->delimiter(',');
    verify->add_option("--workers", workers, "worker threads, 0 for all cores");

    auto* norms = app.add_subcommand("norms", "regularity diagnostics of a field CSV");
    norms->add_option("field", field_path, "field CSV")->required();
    norms->add_option("--p", p, "integrability exponent")->capture_default_str();
    norms->add_option("--alpha", alpha, "Holder exponent")->capture_default_str();
    norms->add_option("--radii", radii, "ball radii for p-BMO")->delimiter(',');

    auto* oracle = app.add_subcommand("oracle", "reference solutions");
    oracle->require_subcommand(1);
    auto* radial = oracle->add_subcommand("radial", "radial profile of a disk grad_mercier config");
    radial->add_option("config", config_path, "config file")->required();
    radial->add_option("--points", points, "samples on [0, 1]")->check(CLI::Range(2, 1000000));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return ExitConfig;
    }

    try {
        if (*solve) return cmd_solve(config_path);
        if (*verify) return cmd_verify(hooks, only, workers);
        if (*norms) return cmd_norms(field_path, p, alpha, radii);
        if (*radial) return cmd_oracle(config_path, points);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return ExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return ExitFailure;
    }
    return ExitFailure;
}
