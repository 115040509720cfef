#include <cmath>

#include "kernels_impl.hpp"
#include "kubolab/kernels.hpp"

namespace kubolab::kernels::scalar {

double gamma_bin_accumulate(const double* eigs, const double* occ, const double* pair_w,
                            int n, double eps, const BinGrid* grid, double* bins) {
    const bool mirrored = grid && grid->is_symmetric();
    double total = 0.0;
    for (int c = 0; c < n; ++c) {
        const double ec = eigs[c];
        const double fc = occ[c];
        const double* col = pair_w + static_cast<std::size_t>(c) * n;
        for (int m = c + 1; m < n; ++m) {
            const double a = eigs[m] - ec;
            if (a <= eps) continue;
            const double dep = M_PI * col[m] * (fc - occ[m]) / a;
            total += 2.0 * dep;
            if (!grid) continue;
            const int j = grid->index(a);
            if (j < 0) continue;
            bins[j] += dep;
            if (mirrored) bins[grid->mirror(j)] += dep;
            else {
                const int jm = grid->index(-a);
                if (jm >= 0) bins[jm] += dep;
            }
        }
    }
    return total;
}

double position_pair_mass(const double* eigs, const double* occ, const double* xw,
                          int n, double eps) {
    double total = 0.0;
    for (int c = 0; c < n; ++c) {
        const double ec = eigs[c];
        const double fc = occ[c];
        const double* col = xw + static_cast<std::size_t>(c) * n;
        for (int m = c + 1; m < n; ++m) {
            const double a = eigs[m] - ec;
            if (a <= eps) continue;
            total += 2.0 * M_PI * a * (fc - occ[m]) * col[m];
        }
    }
    return total;
}

void stieltjes_grid(const double* pts, const double* w, int p, double atom, double eta,
                    const double* nu, int k, double* re, double* im) {
    const double inv_pi = 1.0 / M_PI;
    for (int g = 0; g < k; ++g) {
        const double v = nu[g];
        double sr = atom * eta / (v * v + eta * eta);
        double si = atom * v / (v * v + eta * eta);
        for (int j = 0; j < p; ++j) {
            const double a = pts[j] + v;
            const double d = a * a + eta * eta;
            sr += w[j] * eta / d;
            si += w[j] * a / d;
        }
        re[g] = inv_pi * sr;
        im[g] = -inv_pi * si;
    }
}

} // namespace kubolab::kernels::scalar
