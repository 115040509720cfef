#include "kubolab/response.hpp"

#include <algorithm>
#include <cmath>

namespace kubolab::response {

FieldProfile FieldProfile::gaussian(double nu0, double width, double amp) {
    FieldProfile f;
    f.kind = Kind::gaussian;
    f.center = nu0;
    f.scale = width;
    f.amplitude = amp;
    f.validate();
    return f;
}

FieldProfile FieldProfile::lorentzian(double nu0, double gamma, double amp) {
    FieldProfile f;
    f.kind = Kind::lorentzian;
    f.center = nu0;
    f.scale = gamma;
    f.amplitude = amp;
    f.validate();
    return f;
}

FieldProfile FieldProfile::tabulated(std::vector<double> nu,
                                     std::vector<std::complex<double>> values) {
    FieldProfile f;
    f.kind = Kind::tabulated;
    f.table_nu = std::move(nu);
    f.table_values = std::move(values);
    f.validate();
    return f;
}

void FieldProfile::validate() const {
    if (kind != Kind::tabulated) {
        if (center < 0) throw ConfigError("field center must be >= 0", "field.nu0");
        if (!(scale > 0)) throw ConfigError("field width must be > 0", "field.width");
        return;
    }
    if (table_nu.size() != table_values.size() || table_nu.size() < 2)
        throw ConfigError("tabulated field needs matching nu/value arrays", "field.table");
    if (!std::is_sorted(table_nu.begin(), table_nu.end()))
        throw ConfigError("tabulated field grid must be sorted", "field.table");
}

std::complex<double> FieldProfile::eval(double nu) const {
    switch (kind) {
    case Kind::gaussian: {
        const double zp = (nu - center) / scale;
        const double zm = (nu + center) / scale;
        return amplitude * (std::exp(-0.5 * zp * zp) + std::exp(-0.5 * zm * zm));
    }
    case Kind::lorentzian: {
        const double g2 = scale * scale;
        const double xp = nu - center, xm = nu + center;
        return amplitude * (g2 / (xp * xp + g2) + g2 / (xm * xm + g2));
    }
    case Kind::tabulated: {
        if (nu <= table_nu.front() || nu >= table_nu.back()) {
            if (nu == table_nu.front()) return table_values.front();
            if (nu == table_nu.back()) return table_values.back();
            return {0.0, 0.0};
        }
        auto it = std::upper_bound(table_nu.begin(), table_nu.end(), nu);
        std::size_t j = static_cast<std::size_t>(it - table_nu.begin());
        const double t = (nu - table_nu[j - 1]) / (table_nu[j] - table_nu[j - 1]);
        return table_values[j - 1] + t * (table_values[j] - table_values[j - 1]);
    }
    }
    return {0.0, 0.0};
}

double FieldProfile::max_abs() const {
    if (kind != Kind::tabulated) return 2.0 * std::abs(amplitude);
    double m = 0;
    for (auto& v : table_values) m = std::max(m, std::abs(v));
    return m;
}

double FieldProfile::extent() const {
    switch (kind) {
    case Kind::gaussian:
        return center + scale * std::sqrt(2.0 * std::log(1e12));
    case Kind::lorentzian:
        return center + scale * 1e6;
    case Kind::tabulated:
        return std::max(std::abs(table_nu.front()), std::abs(table_nu.back()));
    }
    return 0;
}

double FieldProfile::tail_fraction_outside(double lo, double hi) const {
    switch (kind) {
    case Kind::gaussian: {
        // per bump: total s*sqrt(2 pi), tail via erfc
        const double total = 2.0 * scale * std::sqrt(2.0 * M_PI);
        auto bump_tail = [&](double c) {
            return 0.5 * scale * std::sqrt(2.0 * M_PI) *
                   (std::erfc((hi - c) / (std::sqrt(2.0) * scale)) +
                    std::erfc((c - lo) / (std::sqrt(2.0) * scale)));
        };
        return (bump_tail(center) + bump_tail(-center)) / total;
    }
    case Kind::lorentzian: {
        const double total = 2.0 * M_PI * scale;
        auto bump_tail = [&](double c) {
            return scale * ((M_PI / 2 - std::atan((hi - c) / scale)) +
                            (M_PI / 2 - std::atan((c - lo) / scale)));
        };
        return (bump_tail(center) + bump_tail(-center)) / total;
    }
    case Kind::tabulated: {
        double total = 0, inside = 0;
        for (std::size_t j = 1; j < table_nu.size(); ++j) {
            double seg = 0.5 * (std::abs(table_values[j - 1]) + std::abs(table_values[j])) *
                         (table_nu[j] - table_nu[j - 1]);
            total += seg;
            if (table_nu[j - 1] >= lo && table_nu[j] <= hi) inside += seg;
        }
        return total > 0 ? (total - inside) / total : 0.0;
    }
    }
    return 0;
}

double FieldProfile::symmetry_defect(const std::vector<double>& probe) const {
    double worst = 0;
    for (double nu : probe)
        worst = std::max(worst, std::abs(eval(nu) - std::conj(eval(-nu))));
    return worst;
}

double CurrentTrace::max_imag_residual() const {
    double m = 0;
    for (double r : imag_residual) m = std::max(m, r);
    return m;
}

std::vector<double> uniform_times(double t0, double t1, int count) {
    if (count < 1) throw ConfigError("time grid needs >= 1 points", "times");
    std::vector<double> t(count);
    for (int i = 0; i < count; ++i)
        t[i] = count == 1 ? t0 : t0 + (t1 - t0) * i / (count - 1);
    return t;
}

CurrentTrace in_phase_current(const SpectralMeasure& measure, const FieldProfile& field,
                              const std::vector<double>& times) {
    std::vector<double> probe = measure.point_nu;
    probe.push_back(0.0);
    const double defect = field.symmetry_defect(probe);
    if (defect > 1e-12 * std::max(field.max_abs(), 1e-300))
        throw ConfigError("field profile violates hermitian symmetry on the measure support",
                          "field");

    const std::size_t p = measure.point_nu.size();
    std::vector<std::complex<double>> field_at(p);
    for (std::size_t k = 0; k < p; ++k) field_at[k] = field.eval(measure.point_nu[k]);
    const std::complex<double> atom_term =
        measure.atom_at_zero * field.eval(0.0);

    CurrentTrace out;
    out.times = times;
    out.values.reserve(times.size());
    out.imag_residual.reserve(times.size());
    for (double t : times) {
        std::complex<double> j = atom_term;
        for (std::size_t k = 0; k < p; ++k) {
            const double ph = measure.point_nu[k] * t;
            j += measure.point_w[k] * std::complex<double>(std::cos(ph), std::sin(ph)) *
                 field_at[k];
        }
        out.values.push_back(j.real());
        out.imag_residual.push_back(std::abs(j.imag()));
    }
    return out;
}

std::vector<double> default_nu_grid(const FieldProfile& field, int count) {
    const double x = field.extent();
    std::vector<double> nu(count);
    for (int i = 0; i < count; ++i)
        nu[i] = -x + 2.0 * x * i / (count - 1);
    return nu;
}

namespace {

CurrentTrace adiabatic_current_impl(const SpectralMeasure& measure,
                                    const FieldProfile& field, double eta,
                                    const std::vector<double>& times,
                                    const std::vector<double>& nu_grid, bool in_phase) {
    if (!(eta > 0)) throw ConfigError("adiabatic switching needs eta > 0", "eta");
    if (nu_grid.size() < 2) throw ConfigError("nu grid needs >= 2 points", "nu_grid");
    if (field.tail_fraction_outside(nu_grid.front(), nu_grid.back()) > 1e-6)
        throw ConfigError("nu grid does not cover the field support", "nu_grid");

    std::vector<double> re, im;
    kubo::stieltjes_profile(measure, eta, nu_grid, re, im);

    const std::size_t k = nu_grid.size();
    std::vector<std::complex<double>> integrand(k);
    for (std::size_t j = 0; j < k; ++j) {
        const std::complex<double> sig =
            in_phase ? std::complex<double>(re[j], 0.0) : std::complex<double>(re[j], im[j]);
        integrand[j] = sig * field.eval(nu_grid[j]);
    }

    CurrentTrace out;
    out.times = times;
    for (double t : times) {
        std::complex<double> acc = 0.0;
        for (std::size_t j = 0; j + 1 < k; ++j) {
            const double h = nu_grid[j + 1] - nu_grid[j];
            const std::complex<double> a =
                integrand[j] * std::complex<double>(std::cos(nu_grid[j] * t),
                                                    std::sin(nu_grid[j] * t));
            const std::complex<double> b =
                integrand[j + 1] * std::complex<double>(std::cos(nu_grid[j + 1] * t),
                                                        std::sin(nu_grid[j + 1] * t));
            acc += 0.5 * h * (a + b);
        }
        acc *= std::exp(eta * t);
        out.values.push_back(acc.real());
        out.imag_residual.push_back(std::abs(acc.imag()));
    }
    return out;
}

} // namespace

CurrentTrace adiabatic_current_in_phase(const SpectralMeasure& measure,
                                        const FieldProfile& field, double eta,
                                        const std::vector<double>& times,
                                        const std::vector<double>& nu_grid) {
    return adiabatic_current_impl(measure, field, eta, times, nu_grid, true);
}

CurrentTrace adiabatic_current_full(const SpectralMeasure& measure,
                                    const FieldProfile& field, double eta,
                                    const std::vector<double>& times,
                                    const std::vector<double>& nu_grid) {
    return adiabatic_current_impl(measure, field, eta, times, nu_grid, false);
}

std::vector<TLimitRow> t_limit_current_check(const kubo::EigenSystem& eig,
                                             const model::SiteOperator& velocity,
                                             const FieldProfile& field, double mu,
                                             const std::vector<double>& t_list,
                                             const std::vector<double>& times) {
    PairMeasure phi = kubo::phi_measure(eig, velocity);
    kubo::SigmaOptions opts;
    opts.collect_points = true;

    SpectralMeasure sigma0 = kubo::sigma_from_phi(phi, {mu, 0.0}, opts);
    CurrentTrace j0 = in_phase_current(sigma0, field, times);

    std::vector<TLimitRow> rows;
    for (double t : t_list) {
        if (!(t > 0)) throw ConfigError("temperature list must be > 0", "T_list");
        SpectralMeasure sig = kubo::sigma_from_phi(phi, {mu, t}, opts);
        CurrentTrace j = in_phase_current(sig, field, times);
        double gap = 0;
        for (std::size_t i = 0; i < times.size(); ++i)
            gap = std::max(gap, std::abs(j.values[i] - j0.values[i]));
        rows.push_back({t, gap});
    }
    return rows;
}

SpectralMeasure measure_from_binned(const BinnedMeasure& binned, double atom) {
    SpectralMeasure m;
    m.atom_at_zero = atom;
    for (int i = 0; i < binned.grid.count; ++i)
        if (binned.masses[i] != 0.0) {
            m.point_nu.push_back(binned.grid.center(i));
            m.point_w.push_back(binned.masses[i]);
        }
    return m;
}

} // namespace kubolab::response
