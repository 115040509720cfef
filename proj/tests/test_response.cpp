#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "kubolab/kubo.hpp"
#include "kubolab/model.hpp"
#include "kubolab/response.hpp"
#include "kubolab/rng.hpp"

using namespace kubolab;
using response::CurrentTrace;
using response::FieldProfile;

namespace {

SpectralMeasure atoms(std::vector<double> nu, std::vector<double> w, double atom = 0.0) {
    SpectralMeasure m;
    m.atom_at_zero = atom;
    m.point_nu = std::move(nu);
    m.point_w = std::move(w);
    return m;
}

SpectralMeasure realization_measure(int l, double lambda, std::uint64_t seed, double mu,
                                    double t) {
    model::LatticeSpec lat{1, l, model::Boundary::dirichlet};
    model::DisorderSpec d;
    d.density.width = 2.0;
    d.lambda = lambda;
    d.master_seed = seed;
    auto h = model::make_realization(lat, d, 0);
    auto eig = spectral::diagonalize(h);
    auto vel = model::velocity_operator(h, model::position_operator(lat));
    kubo::SigmaOptions opts;
    opts.collect_points = true;
    return kubo::sigma_measure(eig, vel, {mu, t}, opts);
}

} // namespace

TEST_CASE("field profiles validate their parameters") {
    CHECK_THROWS_AS(FieldProfile::gaussian(1.0, -0.1, 1.0), ConfigError);
    CHECK_THROWS_AS(FieldProfile::lorentzian(-1.0, 0.1, 1.0), ConfigError);
    CHECK_THROWS_AS(FieldProfile::tabulated({0.0}, {{1.0, 0.0}}), ConfigError);
    auto g = FieldProfile::gaussian(1.0, 0.5, 2.0);
    CHECK(g.eval(1.0).real() > g.eval(2.0).real());
    CHECK(g.symmetry_defect({0.3, 1.7, 5.0}) == 0.0);
}

TEST_CASE("an asymmetric tabulated field is rejected by the current") {
    auto bad = FieldProfile::tabulated({-1.0, 0.0, 1.0},
                                       {{0.2, 0.0}, {1.0, 0.0}, {0.9, 0.0}});
    CHECK(bad.symmetry_defect({1.0}) > 1e-12);
    auto m = atoms({-0.5, 0.5}, {1.0, 1.0});
    CHECK_THROWS_AS(response::in_phase_current(m, bad, {0.0}), ConfigError);
}

TEST_CASE("pure atom gives a constant trace") {
    auto field = FieldProfile::gaussian(0.7, 0.3, 1.0);
    auto m = atoms({}, {}, 0.8);
    auto j = response::in_phase_current(m, field, response::uniform_times(0, 5, 21));
    const double expect = 0.8 * field.eval(0.0).real();
    for (double v : j.values) CHECK(v == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("a conjugate pair beats as a cosine") {
    const double nu0 = 1.3, w = 0.4;
    auto field = FieldProfile::gaussian(1.0, 0.5, 1.0);
    auto m = atoms({-nu0, nu0}, {w, w});
    auto times = response::uniform_times(0, 8, 81);
    auto j = response::in_phase_current(m, field, times);
    const double amp = field.eval(nu0).real();
    for (std::size_t i = 0; i < times.size(); ++i)
        CHECK(j.values[i] ==
              doctest::Approx(2.0 * w * amp * std::cos(nu0 * times[i])).epsilon(1e-12));
    CHECK(j.max_imag_residual() <= 1e-10);
}

TEST_CASE("even measures with hermitian fields give real currents") {
    auto sigma = realization_measure(48, 1.0, 77, 0.0, 0.15);
    auto field = FieldProfile::gaussian(1.0, 0.4, 1.0);
    auto j = response::in_phase_current(sigma, field, response::uniform_times(0, 10, 101));
    CHECK(j.max_imag_residual() <= 1e-10);

    // bounded by total mass times the peak field
    double peak = 0;
    for (double v : j.values) peak = std::max(peak, std::abs(v));
    CHECK(peak <= sigma.total_mass() * field.max_abs() + 1e-12);
}

TEST_CASE("current is linear in measure and field") {
    CounterRng rng(5, 5);
    auto times = response::uniform_times(0, 3, 11);
    auto f1 = FieldProfile::gaussian(0.8, 0.5, 1.0);
    auto f2 = FieldProfile::gaussian(0.3, 0.7, 0.6);
    std::vector<double> nus, as, bs;
    for (int i = 0; i < 12; ++i) {
        double nu = 0.2 + 2.0 * rng.next_double();
        nus.insert(nus.end(), {nu, -nu});
        double a = rng.next_double(), b = rng.next_double();
        as.insert(as.end(), {a, a});
        bs.insert(bs.end(), {b, b});
    }
    auto ma = atoms(nus, as, 0.3);
    auto mb = atoms(nus, bs, 0.1);
    auto msum = atoms(nus, [&] {
        std::vector<double> s(as.size());
        for (std::size_t i = 0; i < s.size(); ++i) s[i] = as[i] + bs[i];
        return s;
    }(), 0.4);

    auto ja = response::in_phase_current(ma, f1, times);
    auto jb = response::in_phase_current(mb, f1, times);
    auto jsum = response::in_phase_current(msum, f1, times);
    for (std::size_t i = 0; i < times.size(); ++i)
        CHECK(jsum.values[i] == doctest::Approx(ja.values[i] + jb.values[i]).epsilon(1e-12));

    // additive in the field through a tabulated superposition
    std::vector<double> grid;
    for (int i = 0; i <= 400; ++i) grid.push_back(-4.0 + 8.0 * i / 400);
    std::vector<std::complex<double>> v1, v12;
    for (double nu : grid) {
        v1.push_back(f1.eval(nu));
        v12.push_back(f1.eval(nu) + f2.eval(nu));
    }
    auto jf1 = response::in_phase_current(ma, response::FieldProfile::tabulated(grid, v1),
                                          times);
    auto jf2 = response::in_phase_current(ma, f2, times);
    auto jf12 = response::in_phase_current(
        ma, response::FieldProfile::tabulated(grid, v12), times);
    for (std::size_t i = 0; i < times.size(); ++i)
        CHECK(jf12.values[i] ==
              doctest::Approx(jf1.values[i] + jf2.values[i]).epsilon(5e-11));
}

TEST_CASE("adiabatic smoothing converges to the direct current") {
    auto sigma = realization_measure(48, 1.0, 99, 0.0, 0.2);
    auto field = FieldProfile::gaussian(1.0, 0.5, 1.0);
    std::vector<double> t0{0.0};
    auto direct = response::in_phase_current(sigma, field, t0);
    auto nu_grid = response::default_nu_grid(field, 8192);

    auto j_small =
        response::adiabatic_current_in_phase(sigma, field, 1e-3, t0, nu_grid);
    CHECK(std::abs(j_small.values[0] - direct.values[0]) <=
          0.01 * std::abs(direct.values[0]));

    double prev_gap = 1e300;
    const double floor = 1e-6 * (1.0 + std::abs(direct.values[0]));
    for (double eta : {1.0, 0.3, 0.1, 0.03}) {
        auto j = response::adiabatic_current_in_phase(sigma, field, eta, t0, nu_grid);
        const double gap = std::abs(j.values[0] - direct.values[0]);
        CHECK(gap <= prev_gap + floor);
        prev_gap = gap;
    }
}

TEST_CASE("zero measure gives a zero trace; a bad grid is rejected") {
    SpectralMeasure zero;
    auto field = FieldProfile::gaussian(1.0, 0.5, 1.0);
    auto nu_grid = response::default_nu_grid(field, 1024);
    auto j = response::adiabatic_current_full(zero, field, 0.1,
                                              response::uniform_times(0, 2, 5), nu_grid);
    for (double v : j.values) CHECK(v == 0.0);

    std::vector<double> narrow{-0.1, 0.0, 0.1};
    CHECK_THROWS_AS(
        response::adiabatic_current_in_phase(zero, field, 0.1, {0.0}, narrow),
        ConfigError);
    CHECK_THROWS_AS(response::adiabatic_current_in_phase(zero, field, 0.0, {0.0}, nu_grid),
                    ConfigError);
}

TEST_CASE("temperature ladder of currents approaches the sharp-threshold trace") {
    model::LatticeSpec lat{1, 64, model::Boundary::dirichlet};
    model::DisorderSpec d;
    d.density.width = 2.0;
    d.lambda = 5.0;
    d.master_seed = 12;
    auto h = model::make_realization(lat, d, 0);
    auto eig = spectral::diagonalize(h);
    auto vel = model::velocity_operator(h, model::position_operator(lat));
    auto field = FieldProfile::gaussian(1.0, 0.5, 1.0);
    auto rows = response::t_limit_current_check(eig, vel, field, 0.0,
                                                {0.5, 0.2, 0.1, 0.05},
                                                response::uniform_times(0, 6, 31));
    REQUIRE(rows.size() == 4);
    CHECK(rows.back().sup_gap <= rows.front().sup_gap);
    CHECK(rows.back().sup_gap < 0.05);
}

TEST_CASE("a field vanishing at zero frequency ignores the atom") {
    std::vector<double> grid;
    for (int i = 0; i <= 200; ++i) grid.push_back(0.5 + 1.5 * i / 200);
    std::vector<double> full;
    for (int i = 200; i >= 0; --i) full.push_back(-grid[i]);
    for (double g : grid) full.push_back(g);
    std::vector<std::complex<double>> vals;
    for (double nu : full) vals.push_back({std::exp(-(std::abs(nu) - 1.0) *
                                                    (std::abs(nu) - 1.0) / 0.02),
                                           0.0});
    auto field = response::FieldProfile::tabulated(full, vals);
    CHECK(std::abs(field.eval(0.0)) == 0.0);

    auto with_atom = atoms({-1.0, 1.0}, {0.3, 0.3}, 5.0);
    auto without = atoms({-1.0, 1.0}, {0.3, 0.3}, 0.0);
    auto times = response::uniform_times(0, 4, 17);
    auto ja = response::in_phase_current(with_atom, field, times);
    auto jb = response::in_phase_current(without, field, times);
    for (std::size_t i = 0; i < times.size(); ++i)
        CHECK(ja.values[i] == jb.values[i]);
}

TEST_CASE("binned measures convert to center-point measures") {
    BinGrid grid(-2.0, 2.0, 4);
    BinnedMeasure b(grid);
    b.masses = {0.0, 1.0, 2.0, 0.0};
    auto m = response::measure_from_binned(b, 0.5);
    REQUIRE(m.point_nu.size() == 2);
    CHECK(m.point_nu[0] == -0.5);
    CHECK(m.point_nu[1] == 0.5);
    CHECK(m.total_mass() == 3.5);
}
