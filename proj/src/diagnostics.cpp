#include "kubolab/diagnostics.hpp"

#include <algorithm>
#include <cmath>

namespace kubolab::diagnostics {

std::vector<double> decay_profile_single(const spectral::EigenSystem& eig,
                                         const model::LatticeSpec& lattice, double mu_lo,
                                         double mu_hi, int mu_count) {
    if (mu_count < 1) throw ConfigError("mu grid needs >= 1 points", "diag.mu_count");
    const long n = eig.size();
    const long c = lattice.center_site();
    const int kmax = lattice.length / 2 - 1;

    // cutoff indices for each mu: number of eigenvalues <= mu
    std::vector<long> cut(mu_count);
    for (int i = 0; i < mu_count; ++i) {
        double mu = mu_count == 1 ? mu_lo : mu_lo + (mu_hi - mu_lo) * i / (mu_count - 1);
        cut[i] = std::upper_bound(eig.eigenvalues.data(), eig.eigenvalues.data() + n, mu) -
                 eig.eigenvalues.data();
    }

    std::vector<double> out(kmax + 1, 0.0);
    Eigen::VectorXd prefix(n + 1);
    auto sup_for_site = [&](long x) {
        // prefix sums of V(x, n) V(c, n) over the ascending spectrum make
        // every sharp projection amplitude a partial sum
        prefix[0] = 0.0;
        for (long m = 0; m < n; ++m)
            prefix[m + 1] = prefix[m] + eig.eigenvectors(x, m) * eig.eigenvectors(c, m);
        double best = 0.0;
        for (int i = 0; i < mu_count; ++i) {
            double amp = prefix[cut[i]];
            best = std::max(best, amp * amp);
        }
        return best;
    };

    for (int k = 0; k <= kmax; ++k) {
        if (k == 0) out[0] = sup_for_site(c);
        else out[k] = 0.5 * (sup_for_site(c + k) + sup_for_site(c - k));
    }
    return out;
}

DecayProfile fermi_kernel_decay(const DecayConfig& cfg) {
    if (cfg.lattice.boundary != model::Boundary::dirichlet)
        throw ConfigError("decay diagnostic needs a dirichlet box", "lattice.boundary");
    if (cfg.realizations < 1)
        throw ConfigError("need >= 1 realizations", "realizations");

    DecayProfile prof;
    const int kmax = cfg.lattice.length / 2 - 1;
    prof.distances.resize(kmax + 1);
    for (int k = 0; k <= kmax; ++k) prof.distances[k] = k;
    prof.values.assign(kmax + 1, 0.0);

    for (int r = 0; r < cfg.realizations; ++r) {
        auto h = model::make_realization(cfg.lattice, cfg.disorder, r);
        auto eig = spectral::diagonalize(h);
        auto single =
            decay_profile_single(eig, cfg.lattice, cfg.mu_lo, cfg.mu_hi, cfg.mu_count);
        for (int k = 0; k <= kmax; ++k) prof.values[k] += single[k];
    }
    for (double& v : prof.values) v /= cfg.realizations;

    fit_exponential(prof);
    return prof;
}

void fit_exponential(DecayProfile& profile) {
    const int kmax = static_cast<int>(profile.distances.size()) - 1;
    profile.fit_lo = 3;
    profile.fit_hi = static_cast<int>(std::floor(0.8 * kmax));
    std::vector<double> xs, ys;
    for (int k = profile.fit_lo; k <= profile.fit_hi && k <= kmax; ++k) {
        // skip non-positive/underflowed points rather than failing the fit
        if (profile.values[k] > 1e-290) {
            xs.push_back(k);
            ys.push_back(std::log(profile.values[k]));
        }
    }
    if (xs.size() < 3) {
        profile.fit_ok = false;
        return;
    }
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double denom = n * sxx - sx * sx;
    if (denom <= 0) {
        profile.fit_ok = false;
        return;
    }
    const double slope = (n * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / n;
    double ss_res = 0, ss_tot = 0;
    const double ymean = sy / n;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double fit = intercept + slope * xs[i];
        ss_res += (ys[i] - fit) * (ys[i] - fit);
        ss_tot += (ys[i] - ymean) * (ys[i] - ymean);
    }
    profile.rate = -slope;
    profile.prefactor = std::exp(intercept);
    profile.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 0.0;
    profile.fit_ok = true;
}

double y_norm_single(const spectral::EigenSystem& eig, const model::LatticeSpec& lattice,
                     double mu, double temperature) {
    const long n = eig.size();
    const long c = lattice.center_site();
    spectral::FermiParams p{mu, temperature};
    Eigen::VectorXd coeffs = eig.eigenvectors.row(c).transpose();
    for (long m = 0; m < n; ++m) coeffs[m] *= spectral::fermi(eig.eigenvalues[m], p);
    Eigen::VectorXd vec = eig.eigenvectors * coeffs;
    double s = 0;
    for (long x = 0; x < n; ++x) {
        const double x1 = lattice.centered_x1(x);
        s += x1 * x1 * vec[x] * vec[x];
    }
    return s;
}

std::vector<YNormRow> y_norm_growth(const YNormConfig& cfg) {
    std::vector<YNormRow> rows;
    for (int l : cfg.l_list) {
        model::LatticeSpec lat{cfg.d, l, model::Boundary::dirichlet};
        double sum = 0, sumsq = 0;
        for (int r = 0; r < cfg.realizations; ++r) {
            auto h = model::make_realization(lat, cfg.disorder, r);
            auto eig = spectral::diagonalize(h);
            double v = y_norm_single(eig, lat, cfg.mu, cfg.temperature);
            sum += v;
            sumsq += v * v;
        }
        const double mean = sum / cfg.realizations;
        double se = 0;
        if (cfg.realizations > 1) {
            double var = (sumsq - sum * sum / cfg.realizations) / (cfg.realizations - 1);
            se = std::sqrt(std::max(var, 0.0) / cfg.realizations);
        }
        rows.push_back({l, mean, se});
    }
    return rows;
}

namespace {

double sigma_mass_zero_to(const SpectralMeasure& sigma, double nu) {
    if (!sigma.point_nu.empty() || !sigma.binned)
        return sigma.mass_in(0.0, nu);
    return sigma.atom_at_zero + sigma.binned->mass_in(0.0, nu);
}

} // namespace

std::vector<MottRow> mott_probe(const SpectralMeasure& sigma,
                                const std::vector<double>& nu_grid, int d) {
    std::vector<MottRow> rows;
    for (double nu : nu_grid) {
        if (!(nu > 0.0) || !(nu < 1.0))
            throw ConfigError("probe grid must lie in ]0, 1[", "diag.nu_grid");
        const double num = sigma_mass_zero_to(sigma, nu) / nu;
        const double den = nu * nu * std::pow(std::log(1.0 / nu), d + 2);
        rows.push_back({nu, num / den});
    }
    return rows;
}

FreeOracleResult free_oracle(int d, int l, int grid_points) {
    if (d < 1) throw ConfigError("dimension must be >= 1", "d");
    if (l < 3) throw ConfigError("side length must be >= 3", "L");
    FreeOracleResult res;
    res.d = d;
    res.l = l;

    long n = 1;
    for (int j = 0; j < d; ++j) n *= l;
    res.psi.volume = n;
    res.dos.volume = n;

    std::vector<int> k(d, 0);
    for (long idx = 0; idx < n; ++idx) {
        double energy = 0;
        for (int j = 0; j < d; ++j) energy += 2.0 * std::cos(2.0 * M_PI * k[j] / l);
        const double s1 = std::sin(2.0 * M_PI * k[0] / l);
        if (s1 != 0.0) {
            // zero-weight modes carry no mass; dropping them keeps the
            // measure's support identical to the pipeline's
            res.psi.point_nu.push_back(energy);
            res.psi.point_w.push_back(4.0 * M_PI / n * s1 * s1);
        }
        res.dos.point_nu.push_back(energy);
        res.dos.point_w.push_back(1.0 / n);
        for (int j = 0; j < d; ++j) {
            if (++k[j] < l) break;
            k[j] = 0;
        }
    }

    // smoothed tables with the same bandwidth rule as the measure pipeline
    auto [plo, phi_] = std::minmax_element(res.psi.point_nu.begin(), res.psi.point_nu.end());
    const double width = std::max(*phi_ - *plo, 1e-300);
    const double h = width * std::pow(static_cast<double>(n), -1.0 / 3.0);
    res.psi_bandwidth = h;
    const double norm = 1.0 / (h * std::sqrt(2.0 * M_PI));
    res.grid_e.resize(grid_points);
    res.grid_psi_density.assign(grid_points, 0.0);
    res.grid_dos_density.assign(grid_points, 0.0);
    for (int g = 0; g < grid_points; ++g) {
        const double e = -2.0 * d + 4.0 * d * g / (grid_points - 1);
        res.grid_e[g] = e;
        double sp = 0, sd = 0;
        for (std::size_t i = 0; i < res.psi.point_nu.size(); ++i) {
            const double z = (e - res.psi.point_nu[i]) / h;
            sp += res.psi.point_w[i] * norm * std::exp(-0.5 * z * z);
        }
        for (long i = 0; i < n; ++i) {
            const double z = (e - res.dos.point_nu[i]) / h;
            sd += res.dos.point_w[i] * norm * std::exp(-0.5 * z * z);
        }
        res.grid_psi_density[g] = sp;
        res.grid_dos_density[g] = sd;
    }
    return res;
}

FreeConsistencyReport free_consistency(int d, int l, double mu, double temperature) {
    model::LatticeSpec lat{d, l, model::Boundary::periodic};
    lat.validate();
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(lat.sites());
    auto h = model::assemble_hamiltonian(lat, zero, 0.0);
    auto eig = spectral::diagonalize(h);
    auto vel = model::hopping_velocity(lat);

    kubo::SigmaOptions opts;
    opts.collect_points = true;
    spectral::FermiParams p{mu, temperature};
    auto sigma = kubo::sigma_measure(eig, vel, p, opts);

    FreeConsistencyReport rep;
    rep.sigma_off_atom_mass = sigma.point_mass();
    rep.gamma_mass = rep.sigma_off_atom_mass;
    rep.atom_pipeline = sigma.atom_at_zero;

    auto oracle = free_oracle(d, l, 3);
    auto oracle_atom = kubo::atom_weight(oracle.psi, p);
    rep.atom_oracle = oracle_atom.value;
    rep.bandwidth = oracle_atom.bandwidth;

    const double atom_tol = 1e-8 * (1.0 + std::abs(rep.atom_oracle));
    rep.pass = rep.gamma_mass <= 1e-10 &&
               std::abs(rep.atom_pipeline - rep.atom_oracle) <= atom_tol;
    if (!rep.pass) {
        rep.detail = "gamma_mass=" + std::to_string(rep.gamma_mass) +
                     " atom_pipeline=" + std::to_string(rep.atom_pipeline) +
                     " atom_oracle=" + std::to_string(rep.atom_oracle);
    }
    return rep;
}

} // namespace kubolab::diagnostics
