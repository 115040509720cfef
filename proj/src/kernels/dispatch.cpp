#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <mutex>

#include "kernels_impl.hpp"
#include "kubolab/kernels.hpp"

namespace kubolab::kernels {

namespace {

struct Table {
    Backend backend;
    double (*gamma_bin)(const double*, const double*, const double*, int, double,
                        const BinGrid*, double*);
    double (*pos_mass)(const double*, const double*, const double*, int, double);
    void (*stieltjes)(const double*, const double*, int, double, double, const double*,
                      int, double*, double*);
};

constexpr Table kScalarTable{Backend::scalar, scalar::gamma_bin_accumulate,
                             scalar::position_pair_mass, scalar::stieltjes_grid};

#if defined(KUBOLAB_HAVE_AVX2)
constexpr Table kAvx2Table{Backend::avx2, avx2::gamma_bin_accumulate,
                           avx2::position_pair_mass, avx2::stieltjes_grid};
#endif

bool cpu_has_avx2() {
#if defined(KUBOLAB_HAVE_AVX2)
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

std::atomic<const Table*> g_table{nullptr};
std::once_flag g_init;

const Table* pick_auto() {
#if defined(KUBOLAB_HAVE_AVX2)
    if (cpu_has_avx2()) return &kAvx2Table;
#endif
    return &kScalarTable;
}

void init_from_env() {
    const char* env = std::getenv("KUBOLAB_SIMD");
    if (env && std::strcmp(env, "scalar") == 0) {
        g_table.store(&kScalarTable);
        return;
    }
#if defined(KUBOLAB_HAVE_AVX2)
    if (env && std::strcmp(env, "avx2") == 0 && cpu_has_avx2()) {
        g_table.store(&kAvx2Table);
        return;
    }
#endif
    g_table.store(pick_auto());
}

const Table& table() {
    std::call_once(g_init, init_from_env);
    return *g_table.load();
}

} // namespace

Backend active_backend() { return table().backend; }

const char* backend_name() {
    return active_backend() == Backend::avx2 ? "avx2" : "scalar";
}

bool set_backend(Backend b) {
    std::call_once(g_init, init_from_env);
    if (b == Backend::scalar) {
        g_table.store(&kScalarTable);
        return true;
    }
#if defined(KUBOLAB_HAVE_AVX2)
    if (cpu_has_avx2()) {
        g_table.store(&kAvx2Table);
        return true;
    }
#endif
    return false;
}

void set_backend_auto() {
    std::call_once(g_init, init_from_env);
    g_table.store(pick_auto());
}

double gamma_bin_accumulate(const double* eigs, const double* occ, const double* pair_w,
                            int n, double eps, const BinGrid* grid, double* bins) {
    return table().gamma_bin(eigs, occ, pair_w, n, eps, grid, bins);
}

double position_pair_mass(const double* eigs, const double* occ, const double* xw,
                          int n, double eps) {
    return table().pos_mass(eigs, occ, xw, n, eps);
}

void stieltjes_grid(const double* pts, const double* w, int p, double atom, double eta,
                    const double* nu, int k, double* re, double* im) {
    table().stieltjes(pts, w, p, atom, eta, nu, k, re, im);
}

double gamma_interval_mass(const double* eigs, const double* occ, const double* pair_w,
                           int n, double eps, double lo, double hi) {
    double total = 0.0;
    for (int c = 0; c < n; ++c) {
        const double ec = eigs[c];
        const double fc = occ[c];
        const double* col = pair_w + static_cast<std::size_t>(c) * n;
        for (int m = c + 1; m < n; ++m) {
            const double a = eigs[m] - ec;
            if (a <= eps) continue;
            int hits = (a >= lo && a <= hi) + (-a >= lo && -a <= hi);
            if (hits == 0) continue;
            total += hits * M_PI * col[m] * (fc - occ[m]) / a;
        }
    }
    return total;
}

void gamma_collect_points(const double* eigs, const double* occ, const double* pair_w,
                          int n, double eps, std::vector<double>& nu,
                          std::vector<double>& w) {
    for (int c = 0; c < n; ++c) {
        const double ec = eigs[c];
        const double fc = occ[c];
        const double* col = pair_w + static_cast<std::size_t>(c) * n;
        for (int m = c + 1; m < n; ++m) {
            const double a = eigs[m] - ec;
            if (a <= eps) continue;
            const double dep = M_PI * col[m] * (fc - occ[m]) / a;
            if (dep == 0.0) continue;
            nu.push_back(a);
            w.push_back(dep);
            nu.push_back(-a);
            w.push_back(dep);
        }
    }
}

} // namespace kubolab::kernels
