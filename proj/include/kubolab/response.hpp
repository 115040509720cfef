#pragma once

#include <complex>
#include <vector>

#include "kubolab/kubo.hpp"
#include "kubolab/measure.hpp"

namespace kubolab::response {

/// Frequency profile of the driving field. Hermitian symmetry
/// E(nu) = conj(E(-nu)) keeps the time-domain amplitude real; the built-in
/// shapes are real and even by construction, tabulated profiles are
/// validated against it.
struct FieldProfile {
    enum class Kind { gaussian, lorentzian, tabulated };
    Kind kind = Kind::gaussian;
    double center = 0.0;    // >= 0
    double scale = 1.0;     // gaussian width / lorentzian half-width
    double amplitude = 1.0;
    std::vector<double> table_nu;
    std::vector<std::complex<double>> table_values;

    static FieldProfile gaussian(double nu0, double width, double amp);
    static FieldProfile lorentzian(double nu0, double gamma, double amp);
    static FieldProfile tabulated(std::vector<double> nu,
                                  std::vector<std::complex<double>> values);

    void validate() const;
    std::complex<double> eval(double nu) const;
    double max_abs() const;
    /// Half-range outside which |E| drops below 1e-12 of its peak.
    double extent() const;
    /// Fraction of the integral of |E| lying outside [lo, hi].
    double tail_fraction_outside(double lo, double hi) const;
    /// max over the probe points of |E(nu) - conj(E(-nu))|.
    double symmetry_defect(const std::vector<double>& probe) const;
};

struct CurrentTrace {
    std::vector<double> times;
    std::vector<double> values;        // real part
    std::vector<double> imag_residual; // |imaginary part| per time, diagnostic
    double max_imag_residual() const;
};

std::vector<double> uniform_times(double t0, double t1, int count);

/// J(t) = atom * E(0) + sum_k w_k e^{i nu_k t} E(nu_k). The field must
/// satisfy hermitian symmetry on the measure's support (checked to 1e-12).
CurrentTrace in_phase_current(const SpectralMeasure& measure, const FieldProfile& field,
                              const std::vector<double>& times);

/// Uniform grid over [-extent, extent] of the field.
std::vector<double> default_nu_grid(const FieldProfile& field, int count = 8192);

/// Adiabatically switched current at smoothing eta > 0, by trapezoidal
/// quadrature of the smoothed measure against the field. The in-phase
/// variant keeps only the dissipative (real) part of the smoothing; the
/// full variant integrates the whole complex profile.
CurrentTrace adiabatic_current_in_phase(const SpectralMeasure& measure,
                                        const FieldProfile& field, double eta,
                                        const std::vector<double>& times,
                                        const std::vector<double>& nu_grid);
CurrentTrace adiabatic_current_full(const SpectralMeasure& measure,
                                    const FieldProfile& field, double eta,
                                    const std::vector<double>& times,
                                    const std::vector<double>& nu_grid);

struct TLimitRow {
    double temperature;
    double sup_gap; // sup_t |J_T(t) - J_0(t)|
};

/// Currents from the same realization at several temperatures, compared in
/// sup norm against the sharp-threshold current.
std::vector<TLimitRow> t_limit_current_check(const kubo::EigenSystem& eig,
                                             const model::SiteOperator& velocity,
                                             const FieldProfile& field, double mu,
                                             const std::vector<double>& t_list,
                                             const std::vector<double>& times);

/// Point measure with one mass per (nonempty) cell at the cell center.
SpectralMeasure measure_from_binned(const BinnedMeasure& binned, double atom);

} // namespace kubolab::response
