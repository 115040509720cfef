#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

#include "kubolab/common.hpp"

namespace kubolab::model {

enum class Boundary { dirichlet, periodic };

const char* to_string(Boundary b);
Boundary boundary_from_string(const std::string& s);

/// Hypercubic box of side L in d dimensions; sites indexed lexicographically
/// (coordinate 0 fastest).
struct LatticeSpec {
    int d = 1;
    int length = 3;
    Boundary boundary = Boundary::dirichlet;

    void validate() const;
    long sites() const;

    long site_index(const std::vector<int>& coords) const;
    std::vector<int> coordinates(long index) const;
    /// First coordinate of a site, centered: x1 - floor(L/2).
    int centered_x1(long index) const;
    long center_site() const;
};

enum class DensityKind { uniform, discrete };

/// Single-site distribution of the on-site disorder.
struct Density {
    DensityKind kind = DensityKind::uniform;
    double width = 1.0;                // uniform on [-width/2, width/2]
    std::vector<double> values;        // discrete support
    std::vector<double> probabilities; // discrete weights, sum to 1

    void validate() const;
    double max_abs_value() const;
    /// sup-norm of the density; infinite (throws) for discrete laws.
    double sup_density() const;
    double sample(double u01) const; // inverse-CDF map of a uniform draw
};

struct DisorderSpec {
    Density density;
    double lambda = 1.0;
    std::uint64_t master_seed = 0;

    void validate() const;
};

/// One disorder realization: H = A + lambda*diag(V) with A the adjacency
/// matrix of the box graph (hopping entries exactly 1).
struct HamiltonianRealization {
    LatticeSpec lattice;
    Eigen::VectorXd potential;
    Eigen::MatrixXd matrix;
    int realization_index = -1;
    std::uint64_t seed = 0;
};

/// Real storage for single-particle operators. The represented operator is
/// `mat` when times_i is false and i*mat when true, so a Hermitian operator
/// with purely imaginary entries is held as a real antisymmetric matrix.
struct SiteOperator {
    enum class Kind { position, velocity };
    Kind kind = Kind::position;
    bool times_i = false;
    Eigen::MatrixXd mat;

    Eigen::MatrixXcd complex_matrix() const;
    /// (1/N) * sum |entries|^2
    double frobenius_mass_per_site() const;
};

/// N i.i.d. draws from the single-site density, from the counter-based
/// stream keyed by (master_seed, realization_index). Bit-reproducible.
Eigen::VectorXd sample_potential(const DisorderSpec& spec, const LatticeSpec& lattice,
                                 int realization_index);

HamiltonianRealization assemble_hamiltonian(const LatticeSpec& lattice,
                                            const Eigen::VectorXd& potential, double lambda);

/// sample_potential + assemble_hamiltonian, with provenance filled in.
HamiltonianRealization make_realization(const LatticeSpec& lattice, const DisorderSpec& disorder,
                                        int realization_index);

/// Multiplication by the centered first coordinate.
SiteOperator position_operator(const LatticeSpec& lattice);

/// i[H, X1]. Defined on boxes where X1 is single-valued; rejects periodic
/// boundaries (the coordinate jumps across the seam).
SiteOperator velocity_operator(const HamiltonianRealization& h, const SiteOperator& x1);

/// Translation-invariant hopping form i[-Delta, X1]: +/-i along direction-1
/// bonds, following the hop direction (cyclically on the torus). Equals
/// velocity_operator entrywise on Dirichlet boxes.
SiteOperator hopping_velocity(const LatticeSpec& lattice);

} // namespace kubolab::model
