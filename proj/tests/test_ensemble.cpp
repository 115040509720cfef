#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "kubolab/ensemble.hpp"
#include "kubolab/io.hpp"
#include "kubolab/rng.hpp"

using namespace kubolab;
using ensemble::json;
using ensemble::RunConfig;

namespace fs = std::filesystem;

namespace {

json base_config_json() {
    return json{{"task", "sigma"},
                {"lattice", {{"d", 1}, {"L", 32}, {"boundary", "dirichlet"}}},
                {"disorder",
                 {{"density", {{"type", "uniform"}, {"W", 2.0}}},
                  {"lambda", 1.0},
                  {"masterSeed", 77}}},
                {"fermi", {{"mu", 0.0}, {"T", 0.2}}},
                {"binning", {{"bins", 64}}},
                {"realizations", 6}};
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("kubolab_test_" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

json strip_timestamp(json j) {
    j["meta"].erase("timestamp");
    return j;
}

} // namespace

TEST_CASE("plans are deterministic with distinct per-unit seeds") {
    auto cfg = RunConfig::from_json(base_config_json());
    auto a = ensemble::plan(cfg);
    auto b = ensemble::plan(cfg);
    REQUIRE(a.size() == 6);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].index == static_cast<int>(i));
        CHECK(a[i].seed == b[i].seed);
        for (std::size_t j = 0; j < i; ++j) CHECK(a[i].seed != a[j].seed);
    }

    auto bad = base_config_json();
    bad["realizations"] = 0;
    CHECK_THROWS_AS(RunConfig::from_json(bad), ConfigError);
}

TEST_CASE("accumulator merge equals streaming over the concatenation") {
    CounterRng rng(3, 3);
    std::vector<double> xs;
    for (int i = 0; i < 257; ++i) xs.push_back(rng.next_double() * 10 - 5);

    ensemble::Welford all;
    for (double x : xs) all.add(x);
    for (std::size_t split : {1ul, 64ul, 200ul}) {
        ensemble::Welford a, b;
        for (std::size_t i = 0; i < split; ++i) a.add(xs[i]);
        for (std::size_t i = split; i < xs.size(); ++i) b.add(xs[i]);
        a.merge(b);
        CHECK(a.n == all.n);
        CHECK(a.mean == doctest::Approx(all.mean).epsilon(1e-13));
        CHECK(a.m2 == doctest::Approx(all.m2).epsilon(1e-12));
    }

    ensemble::Welford one;
    one.add(3.5);
    CHECK(one.stderr_() == 0.0);
}

TEST_CASE("worker count does not change a single bit of the estimate") {
    auto cfg = RunConfig::from_json(base_config_json());
    ensemble::RunOptions one, eight;
    one.threads = 1;
    eight.threads = 8;
    auto a = ensemble::run(cfg, one);
    auto b = ensemble::run(cfg, eight);
    CHECK(a.to_json(false).dump() == b.to_json(false).dump());
}

TEST_CASE("run directory layout, determinism, resume") {
    TempDir d1("run1"), d2("run2");
    auto j = base_config_json();
    j["realizations"] = 4;

    j["output"] = d1.path.string();
    auto cfg1 = RunConfig::from_json(j);
    ensemble::run(cfg1, {});

    j["output"] = d2.path.string();
    auto cfg2 = RunConfig::from_json(j);
    ensemble::run(cfg2, {});

    CHECK(fs::exists(d1.path / "config.json"));
    CHECK(fs::exists(d1.path / "result.json"));
    CHECK(fs::exists(d1.path / "result.csv"));
    for (int i = 0; i < 4; ++i)
        CHECK(fs::exists(d1.path / "units" / io::unit_filename(i)));

    auto r1 = strip_timestamp(io::read_json_file(d1.path / "result.json"));
    auto r2 = strip_timestamp(io::read_json_file(d2.path / "result.json"));
    CHECK(r1.dump() == r2.dump());

    // resume: completed unit files stay byte-identical, result reproduces
    std::ifstream in(d1.path / "units" / "0002.json");
    std::string unit_before((std::istreambuf_iterator<char>(in)), {});
    in.close();
    fs::remove(d1.path / "result.json");
    ensemble::RunOptions resume;
    resume.resume = true;
    ensemble::run(cfg1, resume);
    std::ifstream in2(d1.path / "units" / "0002.json");
    std::string unit_after((std::istreambuf_iterator<char>(in2)), {});
    CHECK(unit_before == unit_after);
    auto r3 = strip_timestamp(io::read_json_file(d1.path / "result.json"));
    CHECK(r1.dump() == r3.dump());
}

TEST_CASE("counting-measure ensemble honors the density ceiling") {
    json j = base_config_json();
    j["task"] = "dos";
    j["lattice"]["L"] = 128;
    j["realizations"] = 24;
    j["binning"]["bins"] = 120;
    auto cfg = RunConfig::from_json(j);
    auto est = ensemble::run(cfg, {});

    // per-realization normalization is exact, so the spread collapses
    CHECK(est.scalars.at("total_mass").mean == 1.0);
    CHECK(est.scalars.at("total_mass").stderr_() == 0.0);

    const auto& axis = est.axes.at("dos");
    const double width = axis.edges[1] - axis.edges[0];
    const double ceiling = 0.5; // sup of the on-site density
    const auto& cells = est.blocks.at("dos");
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const double density = cells[i].mean / width;
        const double se = cells[i].stderr_() / width;
        CHECK(density <= ceiling + 5.0 * se + 1e-12);
    }

    // zero-frequency block rides along and is dominated
    const auto& psi = est.blocks.at("psi");
    for (std::size_t i = 0; i < cells.size(); ++i)
        CHECK(psi[i].mean <= 4.0 * M_PI * cells[i].mean + 1e-12);
}

TEST_CASE("sweeps share realizations across grid points") {
    json j = base_config_json();
    j["realizations"] = 3;
    j["sweep"] = {{"mu", {-0.5, 0.5}}, {"T", {0.5, 0.1}}};
    auto cfg = RunConfig::from_json(j);
    auto est = ensemble::run(cfg, {});
    REQUIRE(est.meta.contains("sweep_points"));
    CHECK(est.meta["sweep_points"].size() == 4);
    CHECK(est.scalars.count("g000.total_mass") == 1);
    CHECK(est.scalars.count("g003.atom") == 1);
    CHECK(est.blocks.count("g002.gamma") == 1);

    // same seeds at every grid point by construction: unit 0 recomputed
    auto unit = ensemble::compute_unit(cfg, 0);
    CHECK(unit.seed == ensemble::plan(cfg)[0].seed);
}

TEST_CASE("config overrides") {
    auto j = base_config_json();
    ensemble::apply_override(j, "fermi.T=0.35");
    CHECK(j["fermi"]["T"] == 0.35);
    ensemble::apply_override(j, "lattice.boundary=periodic");
    CHECK(j["lattice"]["boundary"] == "periodic");
    CHECK_THROWS_AS(ensemble::apply_override(j, "fermi.T=hello"), ConfigError);
    CHECK_THROWS_AS(ensemble::apply_override(j, "nonsense"), ConfigError);

    // an empty override set leaves the parsed config identical
    auto c1 = RunConfig::from_json(base_config_json());
    auto j2 = base_config_json();
    auto c2 = RunConfig::from_json(j2);
    CHECK(c1.to_json().dump() == c2.to_json().dump());
    CHECK(c1.hash() == c2.hash());
}

TEST_CASE("config validation points at the failing field") {
    auto j = base_config_json();
    j["lattice"]["L"] = 2;
    try {
        RunConfig::from_json(j);
        FAIL("expected rejection");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.field()).find("lattice") != std::string::npos);
    }

    auto big = base_config_json();
    big["lattice"]["L"] = 5000;
    CHECK_THROWS_AS(RunConfig::from_json(big), ConfigError);

    auto sweep_wrong = base_config_json();
    sweep_wrong["task"] = "dos";
    sweep_wrong["sweep"] = {{"mu", {0.0}}, {"T", {0.1}}};
    CHECK_THROWS_AS(RunConfig::from_json(sweep_wrong), ConfigError);
}

TEST_CASE("unit payloads survive the checkpoint round trip") {
    auto cfg = RunConfig::from_json(base_config_json());
    auto unit = ensemble::compute_unit(cfg, 2);
    auto back = ensemble::UnitResult::from_json(json::parse(unit.to_json().dump()));
    CHECK(back.index == unit.index);
    CHECK(back.seed == unit.seed);
    REQUIRE(back.blocks.at("gamma").size() == unit.blocks.at("gamma").size());
    for (std::size_t i = 0; i < unit.blocks.at("gamma").size(); ++i)
        CHECK(back.blocks.at("gamma")[i] == unit.blocks.at("gamma")[i]);
    for (auto& [k, v] : unit.scalars) CHECK(back.scalars.at(k) == v);
}

TEST_CASE("current task produces a real trace with stderr columns") {
    json j = base_config_json();
    j["task"] = "current";
    j["realizations"] = 3;
    j["field"] = {{"type", "gaussian"}, {"nu0", 1.0}, {"width", 0.5}, {"amplitude", 1.0}};
    j["times"] = {{"t0", 0.0}, {"t1", 4.0}, {"count", 17}};
    auto cfg = RunConfig::from_json(j);
    auto est = ensemble::run(cfg, {});
    REQUIRE(est.blocks.count("J") == 1);
    CHECK(est.blocks.at("J").size() == 17);
    for (const auto& w : est.blocks.at("imag_residual")) CHECK(w.mean <= 1e-10);
}
