#include "kubolab/spectral.hpp"

#include <cmath>

namespace kubolab::spectral {

EigenSystem diagonalize(const model::HamiltonianRealization& h) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h.matrix);
    if (solver.info() != Eigen::Success)
        throw NumericalError("eigensolver failed on realization " +
                             std::to_string(h.realization_index) + " (seed " +
                             std::to_string(h.seed) + ")");
    EigenSystem eig;
    eig.eigenvalues = solver.eigenvalues();
    eig.eigenvectors = solver.eigenvectors();
    eig.meta.realization_index = h.realization_index;
    eig.meta.seed = h.seed;
    return eig;
}

std::pair<double, double> residuals(const EigenSystem& eig, const Eigen::MatrixXd& h) {
    const double hnorm = std::max(h.cwiseAbs().maxCoeff(), 1e-300);
    Eigen::MatrixXd r = h * eig.eigenvectors -
                        eig.eigenvectors * eig.eigenvalues.asDiagonal();
    double res = r.cwiseAbs().maxCoeff() / hnorm;
    Eigen::MatrixXd g = eig.eigenvectors.transpose() * eig.eigenvectors;
    g.diagonal().array() -= 1.0;
    return {res, g.cwiseAbs().maxCoeff()};
}

double fermi(double e, const FermiParams& p) {
    p.validate();
    if (p.temperature == 0.0) return e <= p.mu ? 1.0 : 0.0;
    const double x = (e - p.mu) / p.temperature;
    // exp of the negative-magnitude argument only
    if (x >= 0.0) {
        const double z = std::exp(-x);
        return z / (1.0 + z);
    }
    return 1.0 / (1.0 + std::exp(x));
}

double fermi_derivative_weight(double e, const FermiParams& p) {
    p.validate();
    if (p.temperature <= 0.0)
        throw ConfigError("derivative weight needs T > 0; the zero-frequency atom is "
                          "handled separately at T = 0",
                          "fermi.T");
    const double y = std::abs(e - p.mu) / (2.0 * p.temperature);
    const double z = std::exp(-y);
    const double sech = 2.0 * z / (1.0 + z * z);
    return sech * sech / (4.0 * p.temperature);
}

Eigen::VectorXd fermi_values(const EigenSystem& eig, const FermiParams& p) {
    Eigen::VectorXd f(eig.size());
    for (long i = 0; i < eig.size(); ++i) f[i] = fermi(eig.eigenvalues[i], p);
    return f;
}

Eigen::VectorXd apply_function_of_h(const EigenSystem& eig,
                                    const std::function<double(double)>& g,
                                    const Eigen::VectorXd& vec) {
    Eigen::VectorXd coeffs = eig.eigenvectors.transpose() * vec;
    for (long i = 0; i < eig.size(); ++i) coeffs[i] *= g(eig.eigenvalues[i]);
    return eig.eigenvectors * coeffs;
}

SpectralMeasure dos_measure(const EigenSystem& eig) {
    SpectralMeasure m;
    const long n = eig.size();
    m.volume = n;
    m.meta = eig.meta;
    m.point_nu.assign(eig.eigenvalues.data(), eig.eigenvalues.data() + n);
    m.point_w.assign(n, 1.0 / static_cast<double>(n));
    return m;
}

std::vector<std::pair<int, int>> degenerate_clusters(const Eigen::VectorXd& ascending,
                                                     double eps) {
    std::vector<std::pair<int, int>> out;
    const int n = static_cast<int>(ascending.size());
    int begin = 0;
    for (int i = 1; i <= n; ++i) {
        if (i == n || ascending[i] - ascending[i - 1] > eps) {
            out.emplace_back(begin, i);
            begin = i;
        }
    }
    return out;
}

std::pair<double, double> widest_gap_midpoint(const EigenSystem& eig) {
    const long n = eig.size();
    if (n < 2) throw NumericalError("need at least two eigenvalues to pick a gap");
    // stay away from the spectral edges
    long lo = n / 4, hi = 3 * n / 4;
    double best = -1;
    long arg = lo;
    for (long i = lo; i < std::min(hi, n - 1); ++i) {
        double g = eig.eigenvalues[i + 1] - eig.eigenvalues[i];
        if (g > best) {
            best = g;
            arg = i;
        }
    }
    return {0.5 * (eig.eigenvalues[arg] + eig.eigenvalues[arg + 1]), best};
}

} // namespace kubolab::spectral
