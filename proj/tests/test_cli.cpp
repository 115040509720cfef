#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "kubolab/cli.hpp"
#include "kubolab/io.hpp"

using namespace kubolab;
namespace fs = std::filesystem;

namespace {

int run_cli(std::vector<std::string> args) {
    std::vector<const char*> argv{"kubolab"};
    for (auto& a : args) argv.push_back(a.c_str());
    return cli::run(static_cast<int>(argv.size()), argv.data());
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("kubolab_cli_" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

fs::path write_config(const TempDir& dir, const std::string& name) {
    nlohmann::json j = {
        {"lattice", {{"d", 1}, {"L", 32}, {"boundary", "dirichlet"}}},
        {"disorder",
         {{"density", {{"type", "uniform"}, {"W", 2.0}}},
          {"lambda", 1.0},
          {"masterSeed", 5}}},
        {"fermi", {{"mu", 0.0}, {"T", 0.1}}},
        {"binning", {{"bins", 32}}},
        {"realizations", 2}};
    fs::path p = dir.path / name;
    io::write_text_file(p, j.dump(2));
    return p;
}

} // namespace

TEST_CASE("sigma subcommand runs a configured ensemble with overrides") {
    TempDir dir("sigma");
    auto cfg = write_config(dir, "c.json");
    fs::path out = dir.path / "run";
    int rc = run_cli({"sigma", "--config", cfg.string(), "--set", "fermi.T=0.2", "--out",
                      out.string(), "--svg"});
    CHECK(rc == 0);
    CHECK(fs::exists(out / "result.json"));
    CHECK(fs::exists(out / "result.csv"));
    CHECK(fs::exists(out / "result.svg"));

    auto written = io::read_json_file(out / "config.json");
    CHECK(written["fermi"]["T"] == 0.2);

    std::ifstream svg(out / "result.svg");
    std::string first;
    std::getline(svg, first);
    CHECK(first.rfind("<svg", 0) == 0);
}

TEST_CASE("seed flag pins every output byte") {
    TempDir dir("seed");
    auto cfg = write_config(dir, "c.json");
    fs::path o1 = dir.path / "a", o2 = dir.path / "b";
    CHECK(run_cli({"dos", "--config", cfg.string(), "--seed", "42", "--out", o1.string()}) ==
          0);
    CHECK(run_cli({"dos", "--config", cfg.string(), "--seed", "42", "--out", o2.string()}) ==
          0);
    auto a = io::read_json_file(o1 / "result.json");
    auto b = io::read_json_file(o2 / "result.json");
    a["meta"].erase("timestamp");
    b["meta"].erase("timestamp");
    CHECK(a.dump() == b.dump());
}

TEST_CASE("identity and clean-system suites pass") {
    CHECK(run_cli({"check", "--suite", "identities"}) == 0);
    CHECK(run_cli({"check", "--suite", "free"}) == 0);
}

TEST_CASE("closed-form table carries the degenerate mode-pair row") {
    TempDir dir("oracle");
    CHECK(run_cli({"free-oracle", "--d", "1", "--L", "8", "--out", dir.path.string()}) == 0);
    std::ifstream in(dir.path / "psi_points.csv");
    REQUIRE(in.good());
    std::string line;
    std::getline(in, line); // header
    bool found = false;
    while (std::getline(in, line)) {
        auto comma = line.find(',');
        double e = std::stod(line.substr(0, comma));
        double w = std::stod(line.substr(comma + 1));
        if (e == 0.0 && std::abs(w - M_PI) <= 1e-12) found = true;
    }
    CHECK(found);
}

TEST_CASE("configuration failures exit with code 1") {
    CHECK(run_cli({"sigma", "--config", "/nonexistent/c.json"}) == 1);
    CHECK(run_cli({"--no-such-flag"}) == 1);

    TempDir dir("badsweep");
    auto cfg = write_config(dir, "c.json");
    CHECK(run_cli({"sweep", "--config", cfg.string()}) == 1); // no grids configured
}

TEST_CASE("sweep emits a summary over grid points") {
    TempDir dir("sweep");
    nlohmann::json j = io::read_json_file(write_config(dir, "c.json"));
    j["sweep"] = {{"mu", {0.0}}, {"T", {0.5, 0.1, 0.0}}};
    io::write_text_file(dir.path / "s.json", j.dump());
    fs::path out = dir.path / "run";
    CHECK(run_cli({"sweep", "--config", (dir.path / "s.json").string(), "--out",
                   out.string()}) == 0);
    CHECK(fs::exists(out / "summary.csv"));
    std::ifstream in(out / "summary.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header.rfind("label,mu,T", 0) == 0);
    int rows = 0;
    std::string line;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 3);
}

TEST_CASE("decay diagnostic fits a rate through the cli") {
    TempDir dir("decay");
    nlohmann::json j = io::read_json_file(write_config(dir, "c.json"));
    j["lattice"]["L"] = 48;
    j["disorder"]["lambda"] = 5.0;
    j["disorder"]["density"]["W"] = 1.0;
    j["realizations"] = 4;
    j["diag"] = {{"muLo", -0.5}, {"muHi", 0.5}, {"muCount", 11}};
    io::write_text_file(dir.path / "d.json", j.dump());
    fs::path out = dir.path / "run";
    CHECK(run_cli({"diag", "--kind", "decay", "--config", (dir.path / "d.json").string(),
                   "--out", out.string()}) == 0);
    auto fit = io::read_json_file(out / "decay_fit.json");
    CHECK(fit["fit_ok"] == true);
    CHECK(fit["rate"].get<double>() > 0.0);
}
