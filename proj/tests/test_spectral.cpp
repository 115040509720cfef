#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "kubolab/model.hpp"
#include "kubolab/spectral.hpp"
#include "oracles.hpp"

using namespace kubolab;
using model::Boundary;
using model::LatticeSpec;
using spectral::FermiParams;

namespace {

spectral::EigenSystem clean_ring(int l) {
    LatticeSpec lat{1, l, Boundary::periodic};
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(l);
    return spectral::diagonalize(model::assemble_hamiltonian(lat, zero, 0.0));
}

spectral::EigenSystem disordered_chain(int l, double lambda, std::uint64_t seed) {
    LatticeSpec lat{1, l, Boundary::dirichlet};
    model::DisorderSpec d;
    d.density.width = 2.0;
    d.lambda = lambda;
    d.master_seed = seed;
    return spectral::diagonalize(model::make_realization(lat, d, 0));
}

} // namespace

TEST_CASE("eigensystem satisfies residual and orthonormality bounds") {
    LatticeSpec lat{1, 64, Boundary::dirichlet};
    model::DisorderSpec d;
    d.density.width = 2.0;
    d.lambda = 1.0;
    d.master_seed = 4;
    auto h = model::make_realization(lat, d, 0);
    auto eig = spectral::diagonalize(h);
    auto [res, ortho] = spectral::residuals(eig, h.matrix);
    CHECK(res <= 1e-10);
    CHECK(ortho <= 1e-10);
    for (long i = 1; i < eig.size(); ++i)
        CHECK(eig.eigenvalues[i] >= eig.eigenvalues[i - 1]);

    // reconstruct H from the eigenpairs
    Eigen::MatrixXd back = eig.eigenvectors * eig.eigenvalues.asDiagonal() *
                           eig.eigenvectors.transpose();
    CHECK((back - h.matrix).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("clean ring spectrum matches the mode formula as a multiset") {
    auto eig = clean_ring(8);
    auto expect = oracles::ring_spectrum(8);
    for (int i = 0; i < 8; ++i)
        CHECK(std::abs(eig.eigenvalues[i] - expect[i]) <= 1e-10);
}

TEST_CASE("occupation function") {
    CHECK(spectral::fermi(0.7, {0.7, 0.3}) == 0.5);
    CHECK(spectral::fermi(-1.0, {0.0, 0.0}) == 1.0);
    CHECK(spectral::fermi(0.0, {0.0, 0.0}) == 1.0); // threshold included
    CHECK(spectral::fermi(1e-15, {0.0, 0.0}) == 0.0);
    CHECK(spectral::fermi(1e4, {0.0, 1.0}) == 0.0); // saturates without overflow
    CHECK(spectral::fermi(-1e4, {0.0, 1.0}) == 1.0);

    FermiParams p{0.3, 0.7};
    double prev = 1.0;
    for (double e = -8; e <= 8; e += 0.37) {
        double f = spectral::fermi(e, p);
        CHECK(f <= prev + 1e-15);
        CHECK(f >= 0.0);
        CHECK(f <= 1.0);
        prev = f;
    }
    // non-decreasing in mu
    CHECK(spectral::fermi(0.2, {0.5, 0.3}) >= spectral::fermi(0.2, {0.1, 0.3}));
}

TEST_CASE("occupation derivative weight") {
    FermiParams p{0.4, 0.25};
    CHECK(spectral::fermi_derivative_weight(0.4, p) ==
          doctest::Approx(1.0 / (4.0 * 0.25)).epsilon(1e-14));
    CHECK(spectral::fermi_derivative_weight(0.4 + 0.9, p) ==
          doctest::Approx(spectral::fermi_derivative_weight(0.4 - 0.9, p)).epsilon(1e-14));
    CHECK(spectral::fermi_derivative_weight(0.4 + 1e6, p) == 0.0); // underflow, no overflow

    const double mass = oracles::simpson(
        [&](double e) { return spectral::fermi_derivative_weight(e, p); }, 0.4 - 60 * 0.25,
        0.4 + 60 * 0.25, 20001);
    CHECK(std::abs(mass - 1.0) <= 1e-10);

    CHECK_THROWS_AS(spectral::fermi_derivative_weight(0.0, {0.0, 0.0}), ConfigError);
}

TEST_CASE("functions of H act spectrally") {
    auto eig = disordered_chain(32, 1.0, 9);
    LatticeSpec lat{1, 32, Boundary::dirichlet};
    model::DisorderSpec d;
    d.density.width = 2.0;
    d.lambda = 1.0;
    d.master_seed = 9;
    auto h = model::make_realization(lat, d, 0);

    Eigen::VectorXd v = Eigen::VectorXd::Random(32);
    auto hv = spectral::apply_function_of_h(eig, [](double e) { return e; }, v);
    CHECK((hv - h.matrix * v).cwiseAbs().maxCoeff() <= 1e-10);

    auto idv = spectral::apply_function_of_h(eig, [](double) { return 1.0; }, v);
    CHECK((idv - v).cwiseAbs().maxCoeff() <= 1e-12);

    const double below = eig.eigenvalues.minCoeff() - 1.0;
    auto zero = spectral::apply_function_of_h(
        eig, [&](double e) { return spectral::fermi(e, {below, 0.0}); }, v);
    CHECK(zero.cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("counting measure normalization and support") {
    auto eig = clean_ring(16);
    auto dos = spectral::dos_measure(eig);
    CHECK(static_cast<double>(dos.point_nu.size()) * (1.0 / 16.0) == 1.0);
    for (double e : dos.point_nu) {
        CHECK(e >= -2.0 - 1e-12);
        CHECK(e <= 2.0 + 1e-12);
    }

    // additive over a disjoint split of the line
    const double split = 0.3;
    const double left = dos.mass_in(-10.0, split);
    const double right = dos.mass_in(std::nextafter(split, 1.0), 10.0);
    CHECK(left + right == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("degenerate clustering on a crafted spectrum") {
    Eigen::VectorXd v(6);
    v << 0.0, 1e-12, 1e-11, 1.0, 1.0 + 5e-13, 2.0;
    auto clusters = spectral::degenerate_clusters(v, 1e-9);
    REQUIRE(clusters.size() == 3);
    CHECK(clusters[0] == std::pair{0, 3});
    CHECK(clusters[1] == std::pair{3, 5});
    CHECK(clusters[2] == std::pair{5, 6});
}

TEST_CASE("widest interior gap midpoint straddles no eigenvalue") {
    auto eig = disordered_chain(64, 2.0, 21);
    auto [mu, gap] = spectral::widest_gap_midpoint(eig);
    CHECK(gap > 0.0);
    for (long i = 0; i < eig.size(); ++i)
        CHECK(std::abs(eig.eigenvalues[i] - mu) >= 0.5 * gap - 1e-12);
}
