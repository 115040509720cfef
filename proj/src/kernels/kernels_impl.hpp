#pragma once

// Internal: per-backend entry points behind kubolab::kernels dispatch.

#include "kubolab/common.hpp"

namespace kubolab::kernels::scalar {

double gamma_bin_accumulate(const double* eigs, const double* occ, const double* pair_w,
                            int n, double eps, const BinGrid* grid, double* bins);
double position_pair_mass(const double* eigs, const double* occ, const double* xw,
                          int n, double eps);
void stieltjes_grid(const double* pts, const double* w, int p, double atom, double eta,
                    const double* nu, int k, double* re, double* im);

} // namespace kubolab::kernels::scalar

#if defined(KUBOLAB_HAVE_AVX2)
namespace kubolab::kernels::avx2 {

double gamma_bin_accumulate(const double* eigs, const double* occ, const double* pair_w,
                            int n, double eps, const BinGrid* grid, double* bins);
double position_pair_mass(const double* eigs, const double* occ, const double* xw,
                          int n, double eps);
void stieltjes_grid(const double* pts, const double* w, int p, double atom, double eta,
                    const double* nu, int k, double* re, double* im);

} // namespace kubolab::kernels::avx2
#endif
