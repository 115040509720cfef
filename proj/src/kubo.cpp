#include "kubolab/kubo.hpp"

#include <algorithm>
#include <cmath>

#include "kubolab/kernels.hpp"

namespace kubolab::kubo {

PairMeasure pair_weights(const EigenSystem& eig, const model::SiteOperator& op) {
    const long n = eig.size();
    if (op.mat.rows() != n) throw ConfigError("operator dimension mismatch");
    PairMeasure phi;
    phi.values = eig.eigenvalues;
    phi.volume = n;
    phi.meta = eig.meta;
    // |<v_n, O v_m>|^2 is basis-real here: O is either real or i*(real).
    Eigen::MatrixXd m = eig.eigenvectors.transpose() * (op.mat * eig.eigenvectors);
    phi.weights = m.array().square().matrix() / static_cast<double>(n);
    return phi;
}

PairMeasure phi_measure(const EigenSystem& eig, const model::SiteOperator& velocity) {
    if (velocity.kind != model::SiteOperator::Kind::velocity)
        throw ConfigError("phi_measure expects a velocity operator");
    return pair_weights(eig, velocity);
}

double kernel_f(double l1, double l2, const FermiParams& p, double eps) {
    const double d = l1 - l2;
    if (std::abs(d) <= eps) return 0.0;
    return -(spectral::fermi(l1, p) - spectral::fermi(l2, p)) / d;
}

double degeneracy_eps(const Eigen::VectorXd& v) {
    const double width = v[v.size() - 1] - v[0];
    return 1e-9 * std::max(width, 1e-300);
}

SpectralMeasure gamma_measure(const PairMeasure& phi, const FermiParams& p,
                              const GammaOptions& opts) {
    const int n = static_cast<int>(phi.size());
    const double eps = degeneracy_eps(phi.values);
    Eigen::VectorXd occ(n);
    for (int i = 0; i < n; ++i) occ[i] = spectral::fermi(phi.values[i], p);

    SpectralMeasure g;
    g.volume = phi.volume;
    g.meta = phi.meta;
    if (opts.grid) {
        BinnedMeasure b(*opts.grid);
        kernels::gamma_bin_accumulate(phi.values.data(), occ.data(), phi.weights.data(),
                                      n, eps, &*opts.grid, b.masses.data());
        g.binned = std::move(b);
    }
    if (opts.collect_points)
        kernels::gamma_collect_points(phi.values.data(), occ.data(), phi.weights.data(),
                                      n, eps, g.point_nu, g.point_w);
    return g;
}

SpectralMeasure psi_from_phi(const PairMeasure& phi, double eps) {
    const int n = static_cast<int>(phi.size());
    SpectralMeasure psi;
    psi.volume = phi.volume;
    psi.meta = phi.meta;
    for (int a = 0; a < n; ++a) {
        double mass = M_PI * phi.weights(a, a);
        for (int b = a - 1; b >= 0 && phi.values[a] - phi.values[b] <= eps; --b)
            mass += M_PI * phi.weights(a, b);
        for (int b = a + 1; b < n && phi.values[b] - phi.values[a] <= eps; ++b)
            mass += M_PI * phi.weights(a, b);
        if (mass != 0.0) {
            psi.point_nu.push_back(phi.values[a]);
            psi.point_w.push_back(mass);
        }
    }
    return psi;
}

SpectralMeasure psi_diagonal_measure(const EigenSystem& eig,
                                     const model::SiteOperator& velocity) {
    const int n = static_cast<int>(eig.size());
    const double eps = eig.degeneracy_tol();
    SpectralMeasure psi;
    psi.volume = n;
    psi.meta = eig.meta;
    for (int a = 0; a < n; ++a) {
        // diagonal term <v_a, K v_a> = 0 exactly for antisymmetric K
        double mass = 0.0;
        auto add_pair = [&](int b) {
            double el = eig.eigenvectors.col(a).dot(velocity.mat * eig.eigenvectors.col(b));
            mass += M_PI * el * el / n;
        };
        for (int b = a - 1; b >= 0 && eig.eigenvalues[a] - eig.eigenvalues[b] <= eps; --b)
            add_pair(b);
        for (int b = a + 1; b < n && eig.eigenvalues[b] - eig.eigenvalues[a] <= eps; ++b)
            add_pair(b);
        if (mass != 0.0) {
            psi.point_nu.push_back(eig.eigenvalues[a]);
            psi.point_w.push_back(mass);
        }
    }
    return psi;
}

AtomEstimate atom_weight(const SpectralMeasure& psi, const FermiParams& p, double kde_c) {
    p.validate();
    AtomEstimate est;
    if (psi.point_nu.empty()) return est;
    if (p.temperature > 0.0) {
        double s = 0;
        for (std::size_t i = 0; i < psi.point_nu.size(); ++i)
            s += psi.point_w[i] * spectral::fermi_derivative_weight(psi.point_nu[i], p);
        est.value = s;
        return est;
    }
    // sharp-threshold branch: kernel-density estimate of the psi density at
    // mu, restricted to the closed support of psi
    auto [lo_it, hi_it] = std::minmax_element(psi.point_nu.begin(), psi.point_nu.end());
    const double lo = *lo_it, hi = *hi_it;
    const double width = std::max(hi - lo, 1e-300);
    const long n = std::max<long>(psi.volume, 1);
    const double h = kde_c * width * std::pow(static_cast<double>(n), -1.0 / 3.0);
    est.bandwidth = h;
    if (p.mu < lo || p.mu > hi) return est;
    const double norm = 1.0 / (h * std::sqrt(2.0 * M_PI));
    double s = 0;
    for (std::size_t i = 0; i < psi.point_nu.size(); ++i) {
        const double z = (p.mu - psi.point_nu[i]) / h;
        s += psi.point_w[i] * norm * std::exp(-0.5 * z * z);
    }
    est.value = s;
    return est;
}

SpectralMeasure sigma_from_phi(const PairMeasure& phi, const FermiParams& p,
                               const SigmaOptions& opts) {
    const double eps = degeneracy_eps(phi.values);
    SpectralMeasure sigma =
        gamma_measure(phi, p, GammaOptions{opts.grid, opts.collect_points});
    sigma.atom_at_zero = atom_weight(psi_from_phi(phi, eps), p, opts.kde_c).value;
    return sigma;
}

SpectralMeasure sigma_measure(const EigenSystem& eig, const model::SiteOperator& velocity,
                              const FermiParams& p, const SigmaOptions& opts) {
    PairMeasure phi = phi_measure(eig, velocity);
    SpectralMeasure sigma =
        gamma_measure(phi, p, GammaOptions{opts.grid, opts.collect_points});
    sigma.atom_at_zero = atom_weight(psi_diagonal_measure(eig, velocity), p, opts.kde_c).value;
    return sigma;
}

MassCheck mass_two_path_check(const EigenSystem& eig, const model::SiteOperator& velocity,
                              const model::SiteOperator& x1, const FermiParams& p) {
    const int n = static_cast<int>(eig.size());
    const double eps = eig.degeneracy_tol();
    Eigen::VectorXd occ = spectral::fermi_values(eig, p);

    MassCheck out;

    // Route A: pair sum over position matrix elements.
    PairMeasure xw = pair_weights(eig, x1);
    out.mass_a = kernels::position_pair_mass(eig.eigenvalues.data(), occ.data(),
                                             xw.weights.data(), n, eps);

    // Route B: site-basis trace of Xdot^dagger i[X1, f(H)], written with the
    // real antisymmetric part K of the velocity: tr([X1, K] f(H)).
    Eigen::MatrixXd commutator(n, n);
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
            commutator(x, y) = (x1.mat(x, x) - x1.mat(y, y)) * velocity.mat(x, y);
    Eigen::MatrixXd f_of_h = eig.eigenvectors * occ.asDiagonal() *
                             eig.eigenvectors.transpose();
    double trace = commutator.cwiseProduct(f_of_h).sum();

    // remove the near-kernel pairs route A leaves out
    double dust = 0.0;
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n && eig.eigenvalues[b] - eig.eigenvalues[a] <= eps; ++b) {
            const double d = eig.eigenvalues[a] - eig.eigenvalues[b];
            dust += 2.0 * d * (occ[b] - occ[a]) * xw.weights(a, b);
        }
    out.mass_b = M_PI / n * trace - M_PI * dust;
    return out;
}

std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
    if (n < 1) throw ConfigError("quadrature order must be >= 1");
    std::vector<double> x(n), w(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        // Newton iteration from the Chebyshev-angle starting guess
        double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double p0 = 0, p1 = 0;
        for (int iter = 0; iter < 100; ++iter) {
            p0 = 1.0;
            p1 = 0.0;
            for (int k = 0; k < n; ++k) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2 * k + 1) * t * p1 - k * p2) / (k + 1);
            }
            double dp = n * (t * p0 - p1) / (t * t - 1.0);
            double step = p0 / dp;
            t -= step;
            if (std::abs(step) < 1e-15) {
                p0 = 1.0;
                p1 = 0.0;
                for (int k = 0; k < n; ++k) {
                    double p2 = p1;
                    p1 = p0;
                    p0 = ((2 * k + 1) * t * p1 - k * p2) / (k + 1);
                }
                break;
            }
        }
        double dp = n * (t * p0 - p1) / (t * t - 1.0);
        x[i] = -t;
        x[n - 1 - i] = t;
        w[i] = w[n - 1 - i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
    if (n % 2 == 1) x[n / 2] = 0.0;
    return {x, w};
}

namespace {

// Accumulate the occupation-derivative average of sharp-threshold deposits
// into bins: panels between consecutive eigenvalues inside the window, GL
// nodes per panel. At a node E, a pair (n < m) participates iff
// E_n <= E < E_m and E_m - E_n > eps.
void sharp_average_bins(const EigenSystem& eig, const Eigen::MatrixXd& pair_w,
                        const FermiParams& p, const BinGrid& grid, int order,
                        double window_multiple, std::vector<double>& bins) {
    const int n = static_cast<int>(eig.size());
    const double eps = eig.degeneracy_tol();
    const double wlo = p.mu - window_multiple * p.temperature;
    const double whi = p.mu + window_multiple * p.temperature;

    std::vector<double> breaks{wlo, whi};
    for (int i = 0; i < n; ++i) {
        const double e = eig.eigenvalues[i];
        if (e > wlo && e < whi) breaks.push_back(e);
    }
    std::sort(breaks.begin(), breaks.end());

    auto [gx, gw] = gauss_legendre(order);
    bins.assign(grid.count, 0.0);
    const bool mirrored = grid.is_symmetric();

    for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
        const double a = breaks[s], b = breaks[s + 1];
        if (b - a < 1e-300) continue;
        for (int q = 0; q < order; ++q) {
            const double e = 0.5 * (a + b) + 0.5 * (b - a) * gx[q];
            const double node_w =
                0.5 * (b - a) * gw[q] * spectral::fermi_derivative_weight(e, p);
            if (node_w == 0.0) continue;
            // first eigenvalue strictly above e
            int idx = static_cast<int>(std::upper_bound(eig.eigenvalues.data(),
                                                        eig.eigenvalues.data() + n, e) -
                                       eig.eigenvalues.data());
            for (int lo = 0; lo < idx; ++lo) {
                const double el = eig.eigenvalues[lo];
                const double* col = pair_w.data() + static_cast<std::size_t>(lo) * n;
                for (int hi = idx; hi < n; ++hi) {
                    const double d = eig.eigenvalues[hi] - el;
                    if (d <= eps) continue;
                    const double dep = node_w * M_PI * col[hi] / d;
                    const int j = grid.index(d);
                    if (j < 0) continue;
                    bins[j] += dep;
                    if (mirrored) bins[grid.mirror(j)] += dep;
                    else {
                        const int jm = grid.index(-d);
                        if (jm >= 0) bins[jm] += dep;
                    }
                }
            }
        }
    }
}

} // namespace

ConvolutionReport convolution_check(const EigenSystem& eig,
                                    const model::SiteOperator& velocity,
                                    const FermiParams& p, const BinGrid& grid,
                                    const QuadratureSpec& quad, double tol) {
    if (p.temperature <= 0)
        throw ConfigError("convolution check needs T > 0", "fermi.T");

    PairMeasure phi = phi_measure(eig, velocity);
    const int n = static_cast<int>(eig.size());
    const double eps = eig.degeneracy_tol();
    Eigen::VectorXd occ = spectral::fermi_values(eig, p);

    BinnedMeasure lhs(grid);
    kernels::gamma_bin_accumulate(eig.eigenvalues.data(), occ.data(), phi.weights.data(),
                                  n, eps, &grid, lhs.masses.data());

    std::vector<double> rhs, rhs_coarse;
    sharp_average_bins(eig, phi.weights, p, grid, quad.gauss_order,
                       quad.window_multiple, rhs);
    sharp_average_bins(eig, phi.weights, p, grid, std::max(1, quad.gauss_order / 2),
                       quad.window_multiple, rhs_coarse);

    ConvolutionReport rep;
    for (int i = 0; i < grid.count; ++i) {
        rep.sup_bin_discrepancy =
            std::max(rep.sup_bin_discrepancy, std::abs(lhs.masses[i] - rhs[i]));
        rep.refinement_delta =
            std::max(rep.refinement_delta, std::abs(rhs[i] - rhs_coarse[i]));
    }
    rep.under_resolved = rep.refinement_delta > 0.1 * tol;

    std::vector<double> t_grid;
    const double half = std::max(0.5 * eig.spectral_width(), 1.0);
    for (int i = 0; i <= 40; ++i)
        t_grid.push_back(p.mu - half + 2.0 * half * i / 40.0);
    rep.scalar_precheck_error = fermi_reconstruction_error(p, t_grid, quad);
    return rep;
}

double fermi_reconstruction_error(const FermiParams& p, const std::vector<double>& t_grid,
                                  const QuadratureSpec& quad) {
    if (p.temperature <= 0)
        throw ConfigError("reconstruction check needs T > 0", "fermi.T");
    const double wlo = p.mu - quad.window_multiple * p.temperature;
    const double whi = p.mu + quad.window_multiple * p.temperature;
    auto [gx, gw] = gauss_legendre(quad.gauss_order);

    double worst = 0.0;
    for (double t : t_grid) {
        // the sharp threshold cuts the integral off at t; the integrand is
        // smooth on [max(t, wlo), whi]
        const double lo = std::max(t, wlo);
        double approx = 0.0;
        if (whi > lo) {
            const int panels = 64;
            for (int s = 0; s < panels; ++s) {
                const double a = lo + (whi - lo) * s / panels;
                const double b = lo + (whi - lo) * (s + 1) / panels;
                for (int q = 0; q < quad.gauss_order; ++q) {
                    const double e = 0.5 * (a + b) + 0.5 * (b - a) * gx[q];
                    approx += 0.5 * (b - a) * gw[q] * spectral::fermi_derivative_weight(e, p);
                }
            }
        }
        worst = std::max(worst, std::abs(approx - spectral::fermi(t, p)));
    }
    return worst;
}

std::complex<double> stieltjes_transform(const SpectralMeasure& m, double eta, double nu) {
    if (!(eta > 0)) throw ConfigError("stieltjes smoothing needs eta > 0", "eta");
    const std::complex<double> mi_over_pi(0.0, -1.0 / M_PI);
    std::complex<double> s = m.atom_at_zero / std::complex<double>(nu, -eta);
    for (std::size_t i = 0; i < m.point_nu.size(); ++i)
        s += m.point_w[i] / std::complex<double>(m.point_nu[i] + nu, -eta);
    return mi_over_pi * s;
}

void stieltjes_profile(const SpectralMeasure& m, double eta,
                       const std::vector<double>& nu, std::vector<double>& re,
                       std::vector<double>& im) {
    if (!(eta > 0)) throw ConfigError("stieltjes smoothing needs eta > 0", "eta");
    re.assign(nu.size(), 0.0);
    im.assign(nu.size(), 0.0);
    kernels::stieltjes_grid(m.point_nu.data(), m.point_w.data(),
                            static_cast<int>(m.point_nu.size()), m.atom_at_zero, eta,
                            nu.data(), static_cast<int>(nu.size()), re.data(), im.data());
}

} // namespace kubolab::kubo
