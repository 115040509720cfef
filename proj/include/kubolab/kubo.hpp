#pragma once

#include <complex>
#include <optional>
#include <utility>
#include <vector>

#include "kubolab/measure.hpp"
#include "kubolab/model.hpp"
#include "kubolab/spectral.hpp"

namespace kubolab::kubo {

using spectral::EigenSystem;
using spectral::FermiParams;

/// Joint spectral weight of the velocity operator: weight
/// |<v_n, Xdot v_m>|^2 / N at (E_n, E_m) for every ordered pair.
PairMeasure phi_measure(const EigenSystem& eig, const model::SiteOperator& velocity);

/// Same, for an arbitrary site operator (used for the position route).
PairMeasure pair_weights(const EigenSystem& eig, const model::SiteOperator& op);

/// Symmetric nonnegative difference quotient of the occupation:
/// -(f(l1)-f(l2))/(l1-l2) for |l1-l2| > eps, else 0. At T = 0 this is
/// 1/|l1-l2| when the pair straddles mu and 0 otherwise.
double kernel_f(double l1, double l2, const FermiParams& p, double eps);

double degeneracy_eps(const Eigen::VectorXd& ascending_values);

struct GammaOptions {
    std::optional<BinGrid> grid;
    bool collect_points = true;
};

/// Off-zero part of the conductivity measure: deposits pi * w * F at
/// nu = l1 - l2 over all ordered pairs. Never carries mass at 0.
SpectralMeasure gamma_measure(const PairMeasure& phi, const FermiParams& p,
                              const GammaOptions& opts = {});

/// Zero-frequency (commutator-kernel) weight: pi * w at E_n for every
/// ordered pair with |E_n - E_m| <= eps. Strictly complementary to the
/// gamma pair set, so atom + gamma partitions the pair sum exactly.
SpectralMeasure psi_from_phi(const PairMeasure& phi, double eps);

/// Same measure computed directly from eigenvectors, touching only the
/// near-degenerate pairs (no full matrix of pair weights is formed).
/// Exact diagonal terms vanish by antisymmetry of the velocity commutator
/// and are skipped.
SpectralMeasure psi_diagonal_measure(const EigenSystem& eig,
                                     const model::SiteOperator& velocity);

struct AtomEstimate {
    double value = 0.0;
    double bandwidth = 0.0; // 0 for the exact T > 0 route
};

/// Weight of the zero-frequency atom. T > 0: exact sum of psi weights
/// against the occupation derivative. T = 0: Gaussian kernel-density
/// estimate of the psi density at mu with bandwidth
/// h = kde_c * (support width) * volume^(-1/3), restricted to the closed
/// support of psi.
AtomEstimate atom_weight(const SpectralMeasure& psi, const FermiParams& p,
                         double kde_c = 1.0);

struct SigmaOptions {
    std::optional<BinGrid> grid;
    bool collect_points = true;
    double kde_c = 1.0;
};

/// Full conductivity measure: atom at zero plus the off-zero part.
SpectralMeasure sigma_measure(const EigenSystem& eig, const model::SiteOperator& velocity,
                              const FermiParams& p, const SigmaOptions& opts = {});
SpectralMeasure sigma_from_phi(const PairMeasure& phi, const FermiParams& p,
                               const SigmaOptions& opts = {});

struct MassCheck {
    double mass_a = 0.0; // eigen-pair sum over position matrix elements
    double mass_b = 0.0; // site-basis commutator trace, kernel part removed
};

/// Two algebraically equal but independently computed routes to the
/// off-zero mass.
MassCheck mass_two_path_check(const EigenSystem& eig, const model::SiteOperator& velocity,
                              const model::SiteOperator& x1, const FermiParams& p);

struct QuadratureSpec {
    int gauss_order = 12;     // nodes per panel
    double window_multiple = 60.0; // integrate over [mu - w*T, mu + w*T]
};

struct ConvolutionReport {
    double sup_bin_discrepancy = 0.0;
    double scalar_precheck_error = 0.0;
    double refinement_delta = 0.0;
    bool under_resolved = false;
};

/// Checks that the finite-T measure equals the occupation-derivative
/// average of the sharp-threshold measures, bin by bin. The E-integral uses
/// Gauss-Legendre panels split at every eigenvalue (the integrand is
/// piecewise smooth with breakpoints exactly there). Flags under-resolution
/// when halving the panel order moves the result by more than 10% of tol.
ConvolutionReport convolution_check(const EigenSystem& eig,
                                    const model::SiteOperator& velocity,
                                    const FermiParams& p, const BinGrid& grid,
                                    const QuadratureSpec& quad = {}, double tol = 1e-6);

/// Scalar analogue of the identity above: reconstructs the smooth
/// occupation at each t from sharp thresholds; returns the worst error.
double fermi_reconstruction_error(const FermiParams& p, const std::vector<double>& t_grid,
                                  const QuadratureSpec& quad = {});

/// Resolvent smoothing of the measure at frequency nu and half-width eta.
/// Real part is the Poisson average of the measure (nonnegative, mass
/// preserving as eta -> 0); imaginary part is conjugate to it.
std::complex<double> stieltjes_transform(const SpectralMeasure& m, double eta, double nu);

/// Same over a grid, kernel-backed.
void stieltjes_profile(const SpectralMeasure& m, double eta,
                       const std::vector<double>& nu, std::vector<double>& re,
                       std::vector<double>& im);

/// Gauss-Legendre nodes and weights on [-1, 1].
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n);

} // namespace kubolab::kubo
