#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "kubolab/diagnostics.hpp"
#include "kubolab/ensemble.hpp"

using namespace kubolab;

namespace {

model::DisorderSpec uniform_disorder(double w, double lambda, std::uint64_t seed) {
    model::DisorderSpec d;
    d.density.width = w;
    d.lambda = lambda;
    d.master_seed = seed;
    return d;
}

} // namespace

TEST_CASE("closed-form clean tables") {
    auto res = diagnostics::free_oracle(1, 8);
    CHECK(res.psi.mass_in(-1e-12, 1e-12) == doctest::Approx(M_PI).epsilon(1e-12));
    CHECK(res.psi.point_mass() == doctest::Approx(2.0 * M_PI).epsilon(1e-12));
    for (double w : res.psi.point_w) CHECK(w > 0.0);
    for (double e : res.psi.point_nu) {
        CHECK(e >= -2.0);
        CHECK(e <= 2.0);
    }
    for (double v : res.grid_psi_density) CHECK(v >= 0.0);

    // the total is L-independent from L = 3 on
    for (int l : {3, 5, 16, 101})
        CHECK(diagnostics::free_oracle(1, l).psi.point_mass() ==
              doctest::Approx(2.0 * M_PI).epsilon(1e-12));
}

TEST_CASE("clean pipeline agrees with the closed form") {
    for (auto [d, l] : {std::pair{1, 64}, std::pair{2, 12}}) {
        auto rep = diagnostics::free_consistency(d, l, 0.0, 0.0);
        CHECK(rep.gamma_mass <= 1e-10);
        CHECK(rep.pass);
        CHECK(rep.atom_pipeline == doctest::Approx(rep.atom_oracle).epsilon(1e-9));
    }
    // threshold outside the band: everything vanishes
    auto rep = diagnostics::free_consistency(1, 64, 3.0, 0.0);
    CHECK(rep.atom_pipeline + rep.gamma_mass <= 1e-10);
    // finite temperature branch
    auto warm = diagnostics::free_consistency(1, 32, 0.0, 0.3);
    CHECK(warm.pass);
}

TEST_CASE("strong disorder shows an exponential kernel profile, clean does not") {
    diagnostics::DecayConfig cfg;
    cfg.lattice = {1, 64, model::Boundary::dirichlet};
    cfg.disorder = uniform_disorder(1.0, 5.0, 42);
    cfg.realizations = 8;
    cfg.mu_lo = -0.5;
    cfg.mu_hi = 0.5;
    auto strong = diagnostics::fermi_kernel_decay(cfg);
    REQUIRE(strong.fit_ok);
    CHECK(strong.rate > 1.0);
    CHECK(strong.r2 >= 0.9);
    CHECK(strong.values[0] <= 1.0 + 1e-12); // projection matrix element bound

    diagnostics::DecayConfig clean = cfg;
    clean.disorder = uniform_disorder(1.0, 0.0, 42);
    clean.realizations = 1;
    auto free_fit = diagnostics::fermi_kernel_decay(clean);
    CHECK((!free_fit.fit_ok || free_fit.rate < 0.5 * strong.rate));
}

TEST_CASE("square-summability functional stays flat where expected") {
    diagnostics::YNormConfig cfg;
    cfg.d = 1;
    cfg.disorder = uniform_disorder(2.0, 1.0, 9);
    cfg.mu = 0.0;
    cfg.temperature = 0.3;
    cfg.l_list = {32, 64, 128};
    cfg.realizations = 6;
    auto rows = diagnostics::y_norm_growth(cfg);
    REQUIRE(rows.size() == 3);
    // smooth occupations decay away from the threshold, so the functional
    // saturates in volume
    CHECK(std::abs(rows[2].mean / rows[1].mean - 1.0) <= 0.5);

    // threshold below the spectrum: empty projection
    diagnostics::YNormConfig below = cfg;
    below.temperature = 0.0;
    below.mu = -100.0;
    below.l_list = {16, 32};
    for (auto& r : diagnostics::y_norm_growth(below)) CHECK(r.mean <= 1e-12);

    // strong disorder at zero temperature: bounded volume trend
    diagnostics::YNormConfig strong = cfg;
    strong.disorder = uniform_disorder(2.0, 5.0, 10);
    strong.temperature = 0.0;
    strong.l_list = {32, 64, 128};
    strong.realizations = 8;
    auto srows = diagnostics::y_norm_growth(strong);
    CHECK(srows[2].mean <= 3.0 * srows[0].mean + 1e-12);
}

TEST_CASE("low-frequency probe table") {
    std::vector<double> grid{0.05, 0.1, 0.2, 0.4, 0.8};
    SpectralMeasure zero;
    auto rows = diagnostics::mott_probe(zero, grid, 1);
    REQUIRE(rows.size() == grid.size());
    for (auto& r : rows) CHECK(r.ratio == 0.0);

    SpectralMeasure m;
    m.point_nu = {0.3, -0.3};
    m.point_w = {0.2, 0.2};
    auto rows2 = diagnostics::mott_probe(m, grid, 1);
    for (auto& r : rows2) {
        CHECK(std::isfinite(r.ratio));
        CHECK(r.ratio >= 0.0);
    }
    CHECK_THROWS_AS(diagnostics::mott_probe(m, {1.5}, 1), ConfigError);
}

TEST_CASE("per-site trace recipes coincide and settle with volume") {
    ensemble::RunConfig base;
    base.task = "dos";
    base.lattice = {1, 16, model::Boundary::periodic};
    base.disorder = uniform_disorder(2.0, 0.0, 1);
    base.fermi = {0.0, 0.5};
    base.realizations = 1;

    auto rows = ensemble::trace_per_unit_volume_convergence(base, {8, 16, 32});
    REQUIRE(rows.size() == 3);
    for (auto& r : rows) {
        CHECK(r.trace_route_gap <= 1e-13);
        CHECK(r.center_gap_mean <= 1e-13); // translation invariant
        CHECK(r.volume_mean == doctest::Approx(r.fourier_value).epsilon(1e-12));
    }
    CHECK(rows[0].l == 8);
    CHECK(rows[2].l == 32);

    // open box: the center site feels the boundary less and less
    ensemble::RunConfig open = base;
    open.lattice.boundary = model::Boundary::dirichlet;
    auto orows = ensemble::trace_per_unit_volume_convergence(open, {8, 32});
    CHECK(orows[1].center_gap_mean < orows[0].center_gap_mean);
}
