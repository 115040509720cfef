#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "kubolab/common.hpp"

namespace kubolab {

/// Masses on a uniform grid of cells.
struct BinnedMeasure {
    BinGrid grid;
    std::vector<double> masses;

    BinnedMeasure() = default;
    explicit BinnedMeasure(const BinGrid& g) : grid(g), masses(g.count, 0.0) {}

    double total() const;
    /// Mass of [lo, hi] assuming the density is uniform within each cell.
    double mass_in(double lo, double hi) const;
    /// Cumulative mass of [grid.lo, x].
    double mass_below(double x) const;
};

/// Finite positive measure on the line: an explicit atom at 0 plus point
/// masses, with an optional binned view for aggregation.
struct SpectralMeasure {
    double atom_at_zero = 0.0;
    std::vector<double> point_nu;
    std::vector<double> point_w;
    std::optional<BinnedMeasure> binned;
    long volume = 0; // number of lattice sites behind the per-site normalization
    RealizationMeta meta;

    double point_mass() const;
    double total_mass() const { return atom_at_zero + point_mass(); }
    /// Point mass in [lo, hi] (exact; the atom counts when 0 is inside).
    double mass_in(double lo, double hi) const;
    /// Rebin the point masses (atom stays separate). Mirrored deposits on
    /// symmetric grids, so even point sets stay even bin-by-bin exactly.
    BinnedMeasure to_binned(const BinGrid& grid) const;
    /// Largest |mass(B) - mass(-B)| over mirrored cell pairs of a symmetric grid.
    static double evenness_defect(const BinnedMeasure& b);
};

/// Weighted point masses on R^2 supported on eigenvalue pairs: weight(n,m)
/// sits at (values[n], values[m]). Stored as the full symmetric matrix.
struct PairMeasure {
    Eigen::VectorXd values;  // ascending eigenvalues
    Eigen::MatrixXd weights; // symmetric, >= 0
    long volume = 0;
    RealizationMeta meta;

    long size() const { return values.size(); }
    double total_mass() const { return weights.sum(); }
    /// Pushforward of one coordinate (both marginals coincide by symmetry).
    BinnedMeasure marginal(const BinGrid& grid, int coordinate = 0) const;
    /// Pushforward under (l1, l2) -> l1 - l2.
    BinnedMeasure frequency_profile(const BinGrid& grid) const;
    double max_marginal_asymmetry(const BinGrid& grid) const;
};

} // namespace kubolab
