#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = GMSOLVE_CLI_PATH;
const std::string kConfigs = std::string(GMSOLVE_SOURCE_DIR) + "/configs";

fs::path scratch() {
    static const fs::path dir = [] {
        const char* root = std::getenv("GMSOLVE_OUTPUT_ROOT");
        fs::path d = root ? fs::path(root) : fs::temp_directory_path() / "gmsolve_cli_test";
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

struct Result {
    int code = -1;
    std::string out;
};

// Runs the CLI with GMSOLVE_OUTPUT_ROOT set to `root`, capturing stdout and stderr.
Result run(const std::string& args, const fs::path& root = scratch()) {
    const fs::path log = scratch() / "last_run.log";
    const std::string cmd =
        "GMSOLVE_OUTPUT_ROOT='" + root.string() + "' '" + kCli + "' " + args + " > '" + log.string() + "' 2>&1";
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    r.out = ss.str();
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path write_config(const std::string& name, const std::string& text) {
    const fs::path p = scratch() / (name + ".toml");
    std::ofstream(p) << text;
    return p;
}

const char* kSmallPoisson = R"cfg(name = "small_poisson"
[domain]
shape = "square"
n = [17, 33]
[data]
f = "-2*pi^2*sin(pi*x)*sin(pi*y)"
psi = "0"
exact = "sin(pi*x)*sin(pi*y)"
[output]
directory = "runs"
)cfg";

}  // namespace

TEST_CASE("missing or unknown subcommand is a usage error") {
    CHECK(run("").code == 2);
    CHECK(run("frobnicate").code == 2);
    CHECK(run("solve").code == 2);
}

TEST_CASE("solve the manufactured problem") {
    const fs::path cfg = write_config("small_poisson", kSmallPoisson);
    const Result r = run("solve '" + cfg.string() + "'");
    CAPTURE(r.out);
    CHECK(r.code == 0);
    const fs::path dir = scratch() / "runs" / "small_poisson";
    const std::string table = slurp(dir / "errors.csv");
    CHECK(table.rfind("n,h,error,ratio\n", 0) == 0);
    const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
    CHECK(summary.at("exit_code") == 0);
    CHECK(fs::exists(dir / "n33" / "u.csv"));
    CHECK(fs::exists(dir / "n33" / "residual.csv"));
}

TEST_CASE("outputs are deterministic") {
    const fs::path cfg = write_config("small_poisson", kSmallPoisson);
    const fs::path a = scratch() / "det_a", b = scratch() / "det_b";
    REQUIRE(run("solve '" + cfg.string() + "'", a).code == 0);
    REQUIRE(run("solve '" + cfg.string() + "'", b).code == 0);
    for (const char* f : {"n17/u.csv", "n33/u.csv", "n33/residual.csv", "errors.csv"}) {
        CAPTURE(f);
        const std::string x = slurp(a / "runs" / "small_poisson" / f);
        CHECK(!x.empty());
        CHECK(x == slurp(b / "runs" / "small_poisson" / f));
    }
}

TEST_CASE("bundled radial Grad-Mercier config") {
    const Result r = run("solve '" + kConfigs + "/radial_gm.toml'");
    CAPTURE(r.out);
    CHECK(r.code == 0);
    const std::string oracle = slurp(scratch() / "runs" / "radial_gm" / "oracle.csv");
    CHECK(oracle.find("true") != std::string::npos);
    CHECK(oracle.find("false") == std::string::npos);
}

TEST_CASE("configuration errors exit with 2") {
    const fs::path small = write_config("tiny", "[domain]\nn = 4\n");
    const Result r = run("solve '" + small.string() + "'");
    CHECK(r.code == 2);
    CHECK(r.out.find("n >= 8") != std::string::npos);
    CHECK(r.out.find("line 2") != std::string::npos);

    const fs::path unknown = write_config("unknown", "[solver]\nthetta = 0.5\n");
    CHECK(run("solve '" + unknown.string() + "'").code == 2);
    CHECK(run("solve /nonexistent/file.toml").code == 2);
}

TEST_CASE("solver failure exits with 1") {
    const fs::path cfg = write_config("starved", std::string(kSmallPoisson) + "[solver]\nmax_iters = 3\n");
    const Result r = run("solve '" + cfg.string() + "'");
    CHECK(r.code == 1);
    CHECK(fs::exists(scratch() / "runs" / "small_poisson" / "n17" / "error.json"));
}

TEST_CASE("norms and oracle subcommands") {
    const fs::path cfg = write_config("small_poisson", kSmallPoisson);
    REQUIRE(run("solve '" + cfg.string() + "'").code == 0);
    const fs::path field = scratch() / "runs" / "small_poisson" / "n33" / "u.csv";
    const Result n = run("norms '" + field.string() + "' --p 4 --alpha 0.5");
    CHECK(n.code == 0);
    const auto j = nlohmann::json::parse(n.out);
    CHECK(j.at("w2p").get<double>() >= j.at("lp").get<double>());
    CHECK(run("norms /nonexistent.csv").code == 2);

    const Result o = run("oracle radial '" + kConfigs + "/radial_gm.toml' --points 11");
    CHECK(o.code == 0);
    CHECK(o.out.rfind("r,u,du\n", 0) == 0);
    CHECK(run("oracle radial '" + kConfigs + "/poisson_ms.toml'").code == 2);
}

TEST_CASE("verify subcommand") {
    const Result ok = run("verify --criteria 2,13");
    CAPTURE(ok.out);
    CHECK(ok.code == 0);
    CHECK(fs::exists(scratch() / "verify" / "summary.json"));
    const Result bad = run("verify --criteria 8 --flip-ties");
    CHECK(bad.code == 1);
    CHECK(bad.out.find("failing criteria: 8") != std::string::npos);
}
