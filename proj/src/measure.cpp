#include "kubolab/measure.hpp"

#include <algorithm>
#include <cmath>

namespace kubolab {

double BinnedMeasure::total() const {
    double s = 0;
    for (double m : masses) s += m;
    return s;
}

double BinnedMeasure::mass_in(double lo, double hi) const {
    if (hi < lo) return 0.0;
    const double w = grid.width();
    double s = 0;
    for (int i = 0; i < grid.count; ++i) {
        double a = std::max(lo, grid.left_edge(i));
        double b = std::min(hi, grid.right_edge(i));
        if (b > a) s += masses[i] * (b - a) / w;
    }
    return s;
}

double BinnedMeasure::mass_below(double x) const { return mass_in(grid.lo, x); }

double SpectralMeasure::point_mass() const {
    double s = 0;
    for (double w : point_w) s += w;
    return s;
}

double SpectralMeasure::mass_in(double lo, double hi) const {
    double s = (lo <= 0.0 && 0.0 <= hi) ? atom_at_zero : 0.0;
    for (std::size_t i = 0; i < point_nu.size(); ++i)
        if (point_nu[i] >= lo && point_nu[i] <= hi) s += point_w[i];
    return s;
}

BinnedMeasure SpectralMeasure::to_binned(const BinGrid& grid) const {
    BinnedMeasure out(grid);
    const bool mirrored = grid.is_symmetric();
    for (std::size_t i = 0; i < point_nu.size(); ++i) {
        double nu = point_nu[i];
        if (mirrored && nu < 0) {
            int j = grid.index(-nu);
            if (j >= 0) out.masses[grid.mirror(j)] += point_w[i];
        } else {
            int j = grid.index(nu);
            if (j >= 0) out.masses[j] += point_w[i];
        }
    }
    return out;
}

double SpectralMeasure::evenness_defect(const BinnedMeasure& b) {
    double worst = 0;
    for (int i = 0; i < b.grid.count / 2; ++i)
        worst = std::max(worst, std::abs(b.masses[i] - b.masses[b.grid.mirror(i)]));
    return worst;
}

BinnedMeasure PairMeasure::marginal(const BinGrid& grid, int coordinate) const {
    BinnedMeasure out(grid);
    const long n = size();
    for (long a = 0; a < n; ++a) {
        int j = grid.index(values[a]);
        if (j < 0) continue;
        double row = 0;
        for (long b = 0; b < n; ++b)
            row += coordinate == 0 ? weights(a, b) : weights(b, a);
        out.masses[j] += row;
    }
    return out;
}

BinnedMeasure PairMeasure::frequency_profile(const BinGrid& grid) const {
    BinnedMeasure out(grid);
    const long n = size();
    const bool mirrored = grid.is_symmetric();
    for (long a = 0; a < n; ++a) {
        int jd = grid.index(0.0);
        if (jd >= 0) out.masses[jd] += weights(a, a);
        for (long b = a + 1; b < n; ++b) {
            double nu = values[b] - values[a]; // > 0 for ascending values
            double w = weights(a, b);
            int j = grid.index(nu);
            if (j < 0) continue;
            out.masses[j] += w;
            if (mirrored) out.masses[grid.mirror(j)] += w;
            else {
                int jm = grid.index(-nu);
                if (jm >= 0) out.masses[jm] += w;
            }
        }
    }
    return out;
}

double PairMeasure::max_marginal_asymmetry(const BinGrid& grid) const {
    BinnedMeasure a = marginal(grid, 0);
    BinnedMeasure b = marginal(grid, 1);
    double worst = 0;
    for (int i = 0; i < grid.count; ++i)
        worst = std::max(worst, std::abs(a.masses[i] - b.masses[i]));
    return worst;
}

} // namespace kubolab
