// AVX2 variants of the pair-sum kernels. Compiled with -mavx2 -mfma in its
// own translation unit; only reached after the runtime CPU probe.
//
// Per-deposit arithmetic matches the scalar reference step for step (same
// multiply/divide sequence, same bin-index formula), so bin contents agree
// with the scalar backend bit for bit; only the order of the horizontal
// mass reduction differs.

#include <immintrin.h>

#include <cmath>

#include "kernels_impl.hpp"
#include "kubolab/kernels.hpp"

namespace kubolab::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

} // namespace

double gamma_bin_accumulate(const double* eigs, const double* occ, const double* pair_w,
                            int n, double eps, const BinGrid* grid, double* bins) {
    if (grid && !grid->is_symmetric())
        return scalar::gamma_bin_accumulate(eigs, occ, pair_w, n, eps, grid, bins);

    const __m256d vpi = _mm256_set1_pd(M_PI);
    const __m256d veps = _mm256_set1_pd(eps);
    const double lo = grid ? grid->lo : 0.0;
    const double width = grid ? grid->width() : 1.0;
    const int count = grid ? grid->count : 0;
    const __m256d vlo = _mm256_set1_pd(lo);
    const __m256d vwidth = _mm256_set1_pd(width);
    const __m256d vhi = _mm256_set1_pd(grid ? grid->hi : 0.0);

    __m256d vtotal = _mm256_setzero_pd();
    double total_tail = 0.0;

    for (int c = 0; c < n; ++c) {
        const double ec = eigs[c];
        const double fc = occ[c];
        const double* col = pair_w + static_cast<std::size_t>(c) * n;
        const __m256d vec = _mm256_set1_pd(ec);
        const __m256d vfc = _mm256_set1_pd(fc);

        int m = c + 1;
        for (; m + 4 <= n; m += 4) {
            const __m256d va = _mm256_sub_pd(_mm256_loadu_pd(eigs + m), vec);
            const __m256d keep = _mm256_cmp_pd(va, veps, _CMP_GT_OQ);
            if (_mm256_movemask_pd(keep) == 0) continue;
            const __m256d vdf = _mm256_sub_pd(vfc, _mm256_loadu_pd(occ + m));
            const __m256d vw = _mm256_loadu_pd(col + m);
            __m256d dep = _mm256_div_pd(_mm256_mul_pd(_mm256_mul_pd(vpi, vw), vdf), va);
            dep = _mm256_and_pd(dep, keep); // zero skipped lanes (also kills 0/0)
            vtotal = _mm256_add_pd(vtotal, dep);
            if (!grid) continue;

            const __m256d binok =
                _mm256_and_pd(keep, _mm256_cmp_pd(va, vhi, _CMP_LT_OQ));
            int bits = _mm256_movemask_pd(binok);
            if (bits == 0) continue;
            const __m128i vidx = _mm256_cvttpd_epi32(
                _mm256_div_pd(_mm256_sub_pd(va, vlo), vwidth));
            alignas(32) double depbuf[4];
            alignas(16) int idxbuf[4];
            _mm256_storeu_pd(depbuf, dep);
            _mm_storeu_si128(reinterpret_cast<__m128i*>(idxbuf), vidx);
            for (int lane = 0; lane < 4; ++lane) {
                if (!(bits & (1 << lane))) continue;
                int j = idxbuf[lane];
                if (j >= count) j = count - 1;
                bins[j] += depbuf[lane];
                bins[count - 1 - j] += depbuf[lane];
            }
        }
        for (; m < n; ++m) {
            const double a = eigs[m] - ec;
            if (a <= eps) continue;
            const double dep = M_PI * col[m] * (fc - occ[m]) / a;
            total_tail += dep;
            if (!grid) continue;
            const int j = grid->index(a);
            if (j < 0) continue;
            bins[j] += dep;
            bins[grid->mirror(j)] += dep;
        }
    }
    return 2.0 * (hsum(vtotal) + total_tail);
}

double position_pair_mass(const double* eigs, const double* occ, const double* xw,
                          int n, double eps) {
    const __m256d veps = _mm256_set1_pd(eps);
    __m256d vtotal = _mm256_setzero_pd();
    double tail = 0.0;
    for (int c = 0; c < n; ++c) {
        const double ec = eigs[c];
        const double fc = occ[c];
        const double* col = xw + static_cast<std::size_t>(c) * n;
        const __m256d vec = _mm256_set1_pd(ec);
        const __m256d vfc = _mm256_set1_pd(fc);
        int m = c + 1;
        for (; m + 4 <= n; m += 4) {
            const __m256d va = _mm256_sub_pd(_mm256_loadu_pd(eigs + m), vec);
            const __m256d keep = _mm256_cmp_pd(va, veps, _CMP_GT_OQ);
            if (_mm256_movemask_pd(keep) == 0) continue;
            const __m256d vdf = _mm256_sub_pd(vfc, _mm256_loadu_pd(occ + m));
            __m256d term = _mm256_mul_pd(_mm256_mul_pd(va, vdf), _mm256_loadu_pd(col + m));
            term = _mm256_and_pd(term, keep);
            vtotal = _mm256_add_pd(vtotal, term);
        }
        for (; m < n; ++m) {
            const double a = eigs[m] - ec;
            if (a <= eps) continue;
            tail += a * (fc - occ[m]) * col[m];
        }
    }
    return 2.0 * M_PI * (hsum(vtotal) + tail);
}

void stieltjes_grid(const double* pts, const double* w, int p, double atom, double eta,
                    const double* nu, int k, double* re, double* im) {
    const double inv_pi = 1.0 / M_PI;
    const __m256d veta = _mm256_set1_pd(eta);
    const __m256d veta2 = _mm256_set1_pd(eta * eta);
    for (int g = 0; g < k; ++g) {
        const double v = nu[g];
        const __m256d vv = _mm256_set1_pd(v);
        __m256d vsr = _mm256_setzero_pd();
        __m256d vsi = _mm256_setzero_pd();
        int j = 0;
        for (; j + 4 <= p; j += 4) {
            const __m256d va = _mm256_add_pd(_mm256_loadu_pd(pts + j), vv);
            const __m256d vd = _mm256_fmadd_pd(va, va, veta2);
            const __m256d vw = _mm256_loadu_pd(w + j);
            vsr = _mm256_add_pd(vsr, _mm256_div_pd(_mm256_mul_pd(vw, veta), vd));
            vsi = _mm256_add_pd(vsi, _mm256_div_pd(_mm256_mul_pd(vw, va), vd));
        }
        double sr = hsum(vsr);
        double si = hsum(vsi);
        for (; j < p; ++j) {
            const double a = pts[j] + v;
            const double d = a * a + eta * eta;
            sr += w[j] * eta / d;
            si += w[j] * a / d;
        }
        sr += atom * eta / (v * v + eta * eta);
        si += atom * v / (v * v + eta * eta);
        re[g] = inv_pi * sr;
        im[g] = -inv_pi * si;
    }
}

} // namespace kubolab::kernels::avx2
