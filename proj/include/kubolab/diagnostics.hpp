#pragma once

#include <string>
#include <vector>

#include "kubolab/kubo.hpp"
#include "kubolab/measure.hpp"
#include "kubolab/model.hpp"
#include "kubolab/spectral.hpp"

namespace kubolab::diagnostics {

struct DecayConfig {
    model::LatticeSpec lattice;     // dirichlet box
    model::DisorderSpec disorder;
    int realizations = 10;
    double mu_lo = -0.5;
    double mu_hi = 0.5;
    int mu_count = 21; // proxy grid for the sup over the interval
};

struct DecayProfile {
    std::vector<int> distances;
    std::vector<double> values; // ensemble means of sup_mu |<d_x, P_mu d_0>|^2
    double rate = 0.0;          // fitted decay exponent (per site)
    double prefactor = 0.0;
    double r2 = 0.0; // goodness on the log scale
    bool fit_ok = false;
    int fit_lo = 0, fit_hi = 0; // distance range used by the fit
};

/// Profile for one realization: distance k maps to the sup over the mu grid
/// of |<delta_x, P_mu delta_center>|^2, averaged over the two directions
/// along the first axis.
std::vector<double> decay_profile_single(const spectral::EigenSystem& eig,
                                         const model::LatticeSpec& lattice, double mu_lo,
                                         double mu_hi, int mu_count);

/// Ensemble mean of the profile plus a log-scale least-squares fit over the
/// middle distance range (drops |x| < 3 and the outer 20%, and anything
/// that underflowed).
DecayProfile fermi_kernel_decay(const DecayConfig& cfg);

/// Fit rate/prefactor/r2 on an existing mean profile.
void fit_exponential(DecayProfile& profile);

struct YNormConfig {
    int d = 1;
    model::DisorderSpec disorder;
    double mu = 0.0;
    double temperature = 0.0;
    std::vector<int> l_list;
    int realizations = 10;
};

struct YNormRow {
    int l;
    double mean;
    double stderr_;
};

/// ||X1 f(H) delta_center||^2 for one realization.
double y_norm_single(const spectral::EigenSystem& eig, const model::LatticeSpec& lattice,
                     double mu, double temperature);

/// Volume scan of the square-summability functional; flat-in-L values are
/// evidence that mu sits in the well-behaved region, growth is evidence
/// against. Reports values only, never a classification.
std::vector<YNormRow> y_norm_growth(const YNormConfig& cfg);

struct MottRow {
    double nu;
    double ratio;
};

/// Low-frequency suppression table: nu in ]0,1[ maps to
/// [Sigma([0,nu]) / nu] / [nu^2 (log 1/nu)^(d+2)]. Inspection only.
std::vector<MottRow> mott_probe(const SpectralMeasure& sigma,
                                const std::vector<double>& nu_grid, int d);

struct FreeOracleResult {
    int d = 1;
    int l = 8;
    SpectralMeasure psi; // exact zero-frequency measure, one mass per mode
    SpectralMeasure dos;
    double psi_bandwidth = 0.0;
    std::vector<double> grid_e;
    std::vector<double> grid_psi_density; // smoothed, same bandwidth rule as the pipeline
    std::vector<double> grid_dos_density;
};

/// Clean-system reference on the torus, in closed form: mode k carries
/// zero-frequency weight (4 pi / L^d) sin^2(2 pi k_1 / L) at energy
/// sum_j 2 cos(2 pi k_j / L), and counting weight 1/L^d.
FreeOracleResult free_oracle(int d, int l, int grid_points = 201);

struct FreeConsistencyReport {
    double gamma_mass = 0.0;
    double sigma_off_atom_mass = 0.0;
    double atom_pipeline = 0.0;
    double atom_oracle = 0.0;
    double bandwidth = 0.0;
    bool pass = false;
    std::string detail;
};

/// Runs the full measure pipeline on the clean torus and checks it against
/// the closed-form reference: no off-zero mass, and the atom agrees with
/// the reference density at mu within solver precision.
FreeConsistencyReport free_consistency(int d, int l, double mu, double temperature);

} // namespace kubolab::diagnostics
