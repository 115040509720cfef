#pragma once

#include <cstddef>
#include <vector>

#include "kubolab/common.hpp"

namespace kubolab::kernels {

/// The measure-assembly inner loops come in a scalar reference form and an
/// AVX2 form; the backend is chosen once at runtime (CPU probe, overridable
/// through KUBOLAB_SIMD=scalar|avx2|auto or set_backend). Both forms are
/// equivalence-tested against each other.
enum class Backend { scalar, avx2 };

Backend active_backend();
const char* backend_name();
/// Returns false if the requested backend is not available on this CPU.
bool set_backend(Backend b);
void set_backend_auto();

/// All pair kernels scan unordered pairs (n < m) of ascending eigenvalues
/// `eigs` with occupations `occ` = f(eigs) for a non-increasing f. `pair_w`
/// is a column-major n-by-n symmetric weight matrix. A pair at distance
/// a = eigs[m] - eigs[n] <= eps belongs to the kernel of the commutator and
/// is skipped here (it feeds the zero-frequency part instead).
///
/// Each surviving pair carries c = pi * w * (occ[n] - occ[m]) / a, deposited
/// at +a and -a. On a symmetric grid the -a deposit goes to the mirrored
/// cell, which keeps binned evenness exact. Returns the total deposited
/// mass (2c summed over pairs, whether or not `bins` is given).
double gamma_bin_accumulate(const double* eigs, const double* occ, const double* pair_w,
                            int n, double eps, const BinGrid* grid, double* bins);

/// pi * sum over ordered pairs (|a| > eps) of a^2 * F * xw, where xw holds
/// squared position matrix elements per site. Same value as the route above
/// when xw = pair_w / a^2; the two are computed from independent inputs.
double position_pair_mass(const double* eigs, const double* occ, const double* xw,
                          int n, double eps);

/// Off-zero mass landing in [lo, hi] (exact point support, no binning).
double gamma_interval_mass(const double* eigs, const double* occ, const double* pair_w,
                           int n, double eps, double lo, double hi);

/// Append the deposited points (+a, c), (-a, c) to nu/w.
void gamma_collect_points(const double* eigs, const double* occ, const double* pair_w,
                          int n, double eps, std::vector<double>& nu,
                          std::vector<double>& w);

/// Boundary-value smoothing of a point measure plus atom:
///   re[k] = (1/pi) [ atom*eta/(nu_k^2+eta^2) + sum_j w_j*eta/((p_j+nu_k)^2+eta^2) ]
///   im[k] = -(1/pi) [ atom*nu_k/(nu_k^2+eta^2) + sum_j w_j*(p_j+nu_k)/((p_j+nu_k)^2+eta^2) ]
void stieltjes_grid(const double* pts, const double* w, int p, double atom, double eta,
                    const double* nu, int k, double* re, double* im);

} // namespace kubolab::kernels
