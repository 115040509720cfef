#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <functional>
#include <utility>
#include <vector>

#include "kubolab/common.hpp"
#include "kubolab/measure.hpp"
#include "kubolab/model.hpp"

namespace kubolab::spectral {

/// Full eigendecomposition of one realization, eigenvalues ascending,
/// eigenvectors as orthonormal columns.
struct EigenSystem {
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenvectors;
    RealizationMeta meta;

    long size() const { return eigenvalues.size(); }
    double spectral_width() const {
        return eigenvalues[eigenvalues.size() - 1] - eigenvalues[0];
    }
    /// Pairs closer than this are treated as degenerate when splitting the
    /// kernel (diagonal) part from the rest.
    double degeneracy_tol() const { return 1e-9 * std::max(spectral_width(), 1e-300); }
};

EigenSystem diagonalize(const model::HamiltonianRealization& h);

/// max_n ||H v_n - E_n v_n||_inf / ||H||, and worst orthonormality defect.
std::pair<double, double> residuals(const EigenSystem& eig, const Eigen::MatrixXd& h);

/// Chemical potential and temperature of the equilibrium state. T = 0
/// selects the sharp indicator branch, never a small-T limit.
struct FermiParams {
    double mu = 0.0;
    double temperature = 0.0;

    void validate() const {
        if (temperature < 0) throw ConfigError("temperature must be >= 0", "fermi.T");
    }
};

/// Occupation in [0,1]; logistic for T>0 (overflow-safe), indicator of
/// (-inf, mu] at T=0.
double fermi(double e, const FermiParams& p);

/// -d/dE of the T>0 occupation: 1/(4T cosh^2((E-mu)/2T)). Integrates to 1.
double fermi_derivative_weight(double e, const FermiParams& p);

/// fermi() over all eigenvalues.
Eigen::VectorXd fermi_values(const EigenSystem& eig, const FermiParams& p);

/// g(H) vec = sum_n g(E_n) <v_n, vec> v_n.
Eigen::VectorXd apply_function_of_h(const EigenSystem& eig,
                                    const std::function<double(double)>& g,
                                    const Eigen::VectorXd& vec);

/// Eigenvalue counting measure per site: mass 1/N at every eigenvalue.
SpectralMeasure dos_measure(const EigenSystem& eig);

/// Half-open ranges [begin, end) of eigenvalue clusters closer than eps.
std::vector<std::pair<int, int>> degenerate_clusters(const Eigen::VectorXd& ascending,
                                                     double eps);

/// Index of the widest gap between consecutive interior eigenvalues;
/// returns (midpoint, gap width).
std::pair<double, double> widest_gap_midpoint(const EigenSystem& eig);

} // namespace kubolab::spectral
