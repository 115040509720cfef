#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kubolab/common.hpp"
#include "kubolab/model.hpp"
#include "kubolab/response.hpp"
#include "kubolab/spectral.hpp"

namespace kubolab::ensemble {

using nlohmann::json;

/// Streaming (count, mean, M2) accumulator; merges are exact for the mean
/// and sum of squared deviations, and the reducer always folds units in
/// realization-index order so floating-point output is reproducible.
struct Welford {
    long long n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }
    void merge(const Welford& o) {
        if (o.n == 0) return;
        if (n == 0) {
            *this = o;
            return;
        }
        const double d = o.mean - mean;
        const long long t = n + o.n;
        mean += d * o.n / t;
        m2 += o.m2 + d * d * (static_cast<double>(n) * o.n / t);
        n = t;
    }
    double variance() const { return n > 1 ? m2 / (n - 1) : 0.0; }
    double stderr_() const { return n > 1 ? std::sqrt(m2 / (static_cast<double>(n) * (n - 1))) : 0.0; }
};

struct Axis {
    std::string kind;          // "bins" | "points"
    std::vector<double> edges; // bins: count+1 edges
    std::vector<double> points;
    std::size_t size() const { return kind == "bins" ? edges.size() - 1 : points.size(); }
};

struct SweepSpec {
    std::vector<double> mu{0.0};
    std::vector<double> t{0.0};
};

struct TimesSpec {
    double t0 = 0.0;
    double t1 = 10.0;
    int count = 101;
};

struct DiagSpec {
    double mu_lo = -0.5;
    double mu_hi = 0.5;
    int mu_count = 21;
    std::vector<int> l_list;      // volume scans
    std::vector<double> nu_grid;  // low-frequency probe
};

struct RunConfig {
    std::string task = "sigma"; // dos|phi|sigma|current|diag-decay
    model::LatticeSpec lattice;
    model::DisorderSpec disorder;
    spectral::FermiParams fermi;
    std::optional<SweepSpec> sweep; // task sigma only
    int realizations = 1;
    int bins = 400;
    std::optional<double> bin_lo, bin_hi;
    std::optional<response::FieldProfile> field; // current task
    TimesSpec times;                             // current task
    double eta = 0.0;                            // current task; 0 = direct
    DiagSpec diag;
    std::vector<std::pair<double, double>> summary_bands{{0.0, 0.5}, {0.5, 1.0}};
    std::string out_dir;

    void validate() const;
    json to_json() const; // canonical (sorted keys, no volatile fields)
    static RunConfig from_json(const json& j);
    std::uint64_t hash() const { return fnv1a64(to_json().dump()); }

    /// A priori bound on |spectrum|: 2d + lambda * max|V|.
    double spectral_bound() const;
    BinGrid energy_grid() const;    // [-R, R]
    BinGrid frequency_grid() const; // symmetric, covers all eigenvalue differences
};

/// Apply a dotted-path override ("fermi.T=0.2") onto a config JSON tree.
/// The value is parsed as JSON when possible, else kept as a string; the
/// resulting type must match the existing field's type when the field exists.
void apply_override(json& config, const std::string& assignment);

struct WorkUnit {
    int index;
    std::uint64_t seed;
};

std::vector<WorkUnit> plan(const RunConfig& cfg);

struct UnitResult {
    int index = -1;
    std::uint64_t seed = 0;
    std::map<std::string, std::vector<double>> blocks;
    std::map<std::string, double> scalars;

    json to_json() const;
    static UnitResult from_json(const json& j);
};

/// Pure per-realization computation; safe to invoke concurrently on
/// distinct indices.
UnitResult compute_unit(const RunConfig& cfg, int index);

struct EnsembleEstimate {
    std::map<std::string, Axis> axes;
    std::map<std::string, std::vector<Welford>> blocks;
    std::map<std::string, Welford> scalars;
    int n_realizations = 0;
    json meta;

    json to_json(bool with_timestamp = true) const;
};

std::map<std::string, Axis> axes_for(const RunConfig& cfg);

/// Fold unit results in index order (single-threaded, deterministic).
EnsembleEstimate reduce(const RunConfig& cfg, const std::vector<UnitResult>& units);

struct RunOptions {
    int threads = 0;    // 0: KUBOLAB_THREADS or hardware concurrency
    bool resume = false;
    bool write_outputs = true; // only meaningful when cfg.out_dir is set
};

/// Execute all work units (thread pool), checkpoint each as
/// units/NNNN.json when an output directory is configured, and reduce.
/// Failed units raise after the survivors are checkpointed, so a rerun
/// with resume continues where the run stopped.
EnsembleEstimate run(const RunConfig& cfg, const RunOptions& opts = {});

int resolve_threads(int requested);

struct TuvRow {
    int l = 0;
    double center_mean = 0.0;
    double volume_mean = 0.0;
    double center_gap_mean = 0.0;   // |center diagonal - volume average|
    double trace_route_gap = 0.0;   // site-sum route vs spectral-sum route
    double fourier_value = 0.0;     // clean-system reference (lambda = 0 only)
};

/// Two recipes for the per-site trace of f(H) across volumes: the
/// site-basis average and the spectral average are the same sum; the table
/// tracks how fast the center-site diagonal approaches it.
std::vector<TuvRow> trace_per_unit_volume_convergence(const RunConfig& base,
                                                      const std::vector<int>& l_list);

} // namespace kubolab::ensemble
