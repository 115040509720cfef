#include "kubolab/model.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "kubolab/rng.hpp"

namespace kubolab::model {

const char* to_string(Boundary b) {
    return b == Boundary::dirichlet ? "dirichlet" : "periodic";
}

Boundary boundary_from_string(const std::string& s) {
    if (s == "dirichlet") return Boundary::dirichlet;
    if (s == "periodic") return Boundary::periodic;
    throw ConfigError("unknown boundary '" + s + "'", "lattice.boundary");
}

void LatticeSpec::validate() const {
    if (d < 1) throw ConfigError("dimension must be >= 1", "lattice.d");
    if (length < 3) throw ConfigError("side length must be >= 3", "lattice.L");
    double n = std::pow(static_cast<double>(length), d);
    if (n > 2e8) throw ConfigError("site count overflows the dense representation", "lattice");
}

long LatticeSpec::sites() const {
    long n = 1;
    for (int j = 0; j < d; ++j) n *= length;
    return n;
}

long LatticeSpec::site_index(const std::vector<int>& coords) const {
    long idx = 0;
    for (int j = d - 1; j >= 0; --j) idx = idx * length + coords[j];
    return idx;
}

std::vector<int> LatticeSpec::coordinates(long index) const {
    std::vector<int> c(d);
    for (int j = 0; j < d; ++j) {
        c[j] = static_cast<int>(index % length);
        index /= length;
    }
    return c;
}

int LatticeSpec::centered_x1(long index) const {
    return static_cast<int>(index % length) - length / 2;
}

long LatticeSpec::center_site() const {
    std::vector<int> c(d, length / 2);
    return site_index(c);
}

void Density::validate() const {
    if (kind == DensityKind::uniform) {
        if (!(width > 0)) throw ConfigError("uniform width must be > 0", "disorder.density.W");
        return;
    }
    if (values.empty() || values.size() != probabilities.size())
        throw ConfigError("discrete density needs matching values/probabilities",
                          "disorder.density");
    double sum = 0;
    for (double p : probabilities) {
        if (p < 0) throw ConfigError("negative probability", "disorder.density.probabilities");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw ConfigError("probabilities must sum to 1", "disorder.density.probabilities");
}

double Density::max_abs_value() const {
    if (kind == DensityKind::uniform) return width / 2.0;
    double m = 0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
}

double Density::sup_density() const {
    if (kind == DensityKind::uniform) return 1.0 / width;
    throw ConfigError("discrete densities have no bounded density", "disorder.density");
}

double Density::sample(double u01) const {
    if (kind == DensityKind::uniform) return (u01 - 0.5) * width;
    double acc = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        acc += probabilities[i];
        if (u01 < acc) return values[i];
    }
    return values.back();
}

void DisorderSpec::validate() const {
    density.validate();
    if (lambda < 0) throw ConfigError("disorder strength must be >= 0", "disorder.lambda");
}

Eigen::VectorXd sample_potential(const DisorderSpec& spec, const LatticeSpec& lattice,
                                 int realization_index) {
    spec.validate();
    lattice.validate();
    if (realization_index < 0)
        throw ConfigError("realization index must be >= 0", "realization");
    const long n = lattice.sites();
    CounterRng rng(spec.master_seed, static_cast<std::uint64_t>(realization_index));
    Eigen::VectorXd v(n);
    for (long i = 0; i < n; ++i) v[i] = spec.density.sample(rng.next_double());
    return v;
}

namespace {

// Adjacency matrix of the box graph. Dirichlet drops bonds across the
// boundary; periodic wraps them.
Eigen::MatrixXd adjacency(const LatticeSpec& lat) {
    const long n = lat.sites();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    long stride = 1;
    for (int j = 0; j < lat.d; ++j) {
        for (long i = 0; i < n; ++i) {
            int xj = static_cast<int>((i / stride) % lat.length);
            if (xj + 1 < lat.length) {
                a(i, i + stride) = 1.0;
                a(i + stride, i) = 1.0;
            } else if (lat.boundary == Boundary::periodic && lat.length > 2) {
                long wrap = i - static_cast<long>(lat.length - 1) * stride;
                a(i, wrap) = 1.0;
                a(wrap, i) = 1.0;
            }
        }
        stride *= lat.length;
    }
    return a;
}

} // namespace

HamiltonianRealization assemble_hamiltonian(const LatticeSpec& lattice,
                                            const Eigen::VectorXd& potential, double lambda) {
    lattice.validate();
    if (potential.size() != lattice.sites())
        throw ConfigError("potential length does not match the lattice", "potential");
    HamiltonianRealization h;
    h.lattice = lattice;
    h.potential = potential;
    h.matrix = adjacency(lattice);
    h.matrix.diagonal() += lambda * potential;
    return h;
}

HamiltonianRealization make_realization(const LatticeSpec& lattice, const DisorderSpec& disorder,
                                        int realization_index) {
    auto v = sample_potential(disorder, lattice, realization_index);
    auto h = assemble_hamiltonian(lattice, v, disorder.lambda);
    h.realization_index = realization_index;
    h.seed = CounterRng::derive_key(disorder.master_seed,
                                    static_cast<std::uint64_t>(realization_index));
    return h;
}

Eigen::MatrixXcd SiteOperator::complex_matrix() const {
    if (!times_i) return mat.cast<std::complex<double>>();
    return std::complex<double>(0.0, 1.0) * mat.cast<std::complex<double>>();
}

double SiteOperator::frobenius_mass_per_site() const {
    return mat.squaredNorm() / static_cast<double>(mat.rows());
}

SiteOperator position_operator(const LatticeSpec& lattice) {
    lattice.validate();
    const long n = lattice.sites();
    SiteOperator op;
    op.kind = SiteOperator::Kind::position;
    op.times_i = false;
    op.mat = Eigen::MatrixXd::Zero(n, n);
    for (long i = 0; i < n; ++i) op.mat(i, i) = lattice.centered_x1(i);
    return op;
}

SiteOperator velocity_operator(const HamiltonianRealization& h, const SiteOperator& x1) {
    if (h.lattice.boundary == Boundary::periodic)
        throw ConfigError("velocity via the commutator needs a single-valued coordinate; "
                          "use hopping_velocity on the torus",
                          "lattice.boundary");
    const long n = h.lattice.sites();
    if (x1.mat.rows() != n) throw ConfigError("operator dimension mismatch");
    SiteOperator op;
    op.kind = SiteOperator::Kind::velocity;
    op.times_i = true;
    // i[H, X1]: entry (x,y) of the real part is H_xy * (x1(y) - x1(x)).
    op.mat = Eigen::MatrixXd::Zero(n, n);
    for (long x = 0; x < n; ++x)
        for (long y = 0; y < n; ++y)
            if (h.matrix(x, y) != 0.0 && x != y)
                op.mat(x, y) = h.matrix(x, y) * (x1.mat(y, y) - x1.mat(x, x));
    return op;
}

SiteOperator hopping_velocity(const LatticeSpec& lattice) {
    lattice.validate();
    const long n = lattice.sites();
    SiteOperator op;
    op.kind = SiteOperator::Kind::velocity;
    op.times_i = true;
    op.mat = Eigen::MatrixXd::Zero(n, n);
    // +1 toward +e1, -1 toward -e1, by hop direction (well defined across the seam).
    for (long i = 0; i < n; ++i) {
        int x1 = static_cast<int>(i % lattice.length);
        if (x1 + 1 < lattice.length) {
            op.mat(i, i + 1) = 1.0;
            op.mat(i + 1, i) = -1.0;
        } else if (lattice.boundary == Boundary::periodic) {
            long wrap = i - (lattice.length - 1);
            op.mat(i, wrap) = 1.0;
            op.mat(wrap, i) = -1.0;
        }
    }
    return op;
}

} // namespace kubolab::model
