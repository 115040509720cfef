#include "kubolab/ensemble.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "kubolab/diagnostics.hpp"
#include "kubolab/io.hpp"
#include "kubolab/kernels.hpp"
#include "kubolab/kubo.hpp"
#include "kubolab/rng.hpp"

namespace kubolab::ensemble {

namespace fs = std::filesystem;

namespace {

const json* find_path(const json& j, const std::string& dotted) {
    const json* cur = &j;
    std::size_t pos = 0;
    while (pos < dotted.size()) {
        std::size_t dot = dotted.find('.', pos);
        std::string key = dotted.substr(pos, dot == std::string::npos ? dot : dot - pos);
        if (!cur->is_object() || !cur->contains(key)) return nullptr;
        cur = &(*cur)[key];
        if (dot == std::string::npos) break;
        pos = dot + 1;
    }
    return cur;
}

template <typename T>
T require(const json& j, const std::string& path) {
    const json* v = find_path(j, path);
    if (!v) throw ConfigError("missing required field", path);
    try {
        return v->get<T>();
    } catch (const json::exception&) {
        throw ConfigError("wrong type", path);
    }
}

template <typename T>
T optional_or(const json& j, const std::string& path, T fallback) {
    const json* v = find_path(j, path);
    if (!v || v->is_null()) return fallback;
    try {
        return v->get<T>();
    } catch (const json::exception&) {
        throw ConfigError("wrong type", path);
    }
}

model::SiteOperator velocity_for(const RunConfig& cfg,
                                 const model::HamiltonianRealization& h) {
    if (cfg.lattice.boundary == model::Boundary::dirichlet) {
        auto x1 = model::position_operator(cfg.lattice);
        return model::velocity_operator(h, x1);
    }
    if (cfg.disorder.lambda == 0.0) return model::hopping_velocity(cfg.lattice);
    throw ConfigError("disordered runs need a dirichlet box (the coordinate is not "
                      "single-valued on the torus); periodic is reserved for lambda = 0",
                      "lattice.boundary");
}

std::string sweep_label(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "g%03u", static_cast<unsigned>(i));
    return buf;
}

std::vector<spectral::FermiParams> sweep_points(const RunConfig& cfg) {
    std::vector<spectral::FermiParams> pts;
    if (!cfg.sweep) {
        pts.push_back(cfg.fermi);
        return pts;
    }
    for (double t : cfg.sweep->t)
        for (double mu : cfg.sweep->mu) pts.push_back({mu, t});
    return pts;
}

} // namespace

void RunConfig::validate() const {
    static const char* tasks[] = {"dos", "phi", "sigma", "current", "diag-decay"};
    bool known = false;
    for (const char* t : tasks) known |= task == t;
    if (!known) throw ConfigError("unknown task '" + task + "'", "task");
    lattice.validate();
    disorder.validate();
    fermi.validate();
    if (realizations < 1) throw ConfigError("need >= 1 realizations", "realizations");
    if (bins < 1) throw ConfigError("need >= 1 bins", "binning.bins");
    if (bin_lo.has_value() != bin_hi.has_value())
        throw ConfigError("lo and hi must be given together", "binning");
    if (bin_lo && !(*bin_lo < *bin_hi)) throw ConfigError("lo must be < hi", "binning");
    if (sweep) {
        if (task != "sigma") throw ConfigError("sweep grids apply to the sigma task", "sweep");
        if (sweep->mu.empty() || sweep->t.empty())
            throw ConfigError("sweep grids must be non-empty", "sweep");
        if (!std::is_sorted(sweep->mu.begin(), sweep->mu.end()))
            throw ConfigError("mu grid must be sorted", "sweep.mu");
        auto desc = sweep->t;
        std::reverse(desc.begin(), desc.end());
        if (!std::is_sorted(sweep->t.begin(), sweep->t.end()) &&
            !std::is_sorted(desc.begin(), desc.end()))
            throw ConfigError("T grid must be sorted", "sweep.T");
        for (double t : sweep->t)
            if (t < 0) throw ConfigError("temperatures must be >= 0", "sweep.T");
    }
    if (task == "current") {
        if (!field) throw ConfigError("current task needs a field profile", "field");
        field->validate();
        if (times.count < 1) throw ConfigError("need >= 1 time points", "times.count");
        if (eta < 0) throw ConfigError("eta must be >= 0", "eta");
    }
    if (task == "diag-decay") {
        if (lattice.boundary != model::Boundary::dirichlet)
            throw ConfigError("decay diagnostic needs a dirichlet box", "lattice.boundary");
        if (diag.mu_count < 1) throw ConfigError("need >= 1 mu points", "diag.muCount");
        if (!(diag.mu_lo <= diag.mu_hi)) throw ConfigError("muLo must be <= muHi", "diag");
    }
    const double n = std::pow(static_cast<double>(lattice.length), lattice.d);
    if (n > 4096)
        throw ConfigError("site count " + std::to_string(static_cast<long>(n)) +
                              " exceeds the dense eigensolver guard (4096)",
                          "lattice");
}

double RunConfig::spectral_bound() const {
    return 2.0 * lattice.d + disorder.lambda * disorder.density.max_abs_value();
}

BinGrid RunConfig::energy_grid() const {
    if (bin_lo) return BinGrid(*bin_lo, *bin_hi, bins);
    return BinGrid::symmetric(spectral_bound() * (1.0 + 1e-12) + 1e-12, bins);
}

BinGrid RunConfig::frequency_grid() const {
    if (bin_lo) return BinGrid(*bin_lo, *bin_hi, bins);
    return BinGrid::symmetric(2.0 * spectral_bound() * (1.0 + 1e-12) + 1e-12, bins);
}

json RunConfig::to_json() const {
    json j;
    j["task"] = task;
    j["lattice"] = {{"d", lattice.d},
                    {"L", lattice.length},
                    {"boundary", model::to_string(lattice.boundary)}};
    json dens;
    if (disorder.density.kind == model::DensityKind::uniform)
        dens = {{"type", "uniform"}, {"W", disorder.density.width}};
    else
        dens = {{"type", "discrete"},
                {"values", disorder.density.values},
                {"probabilities", disorder.density.probabilities}};
    j["disorder"] = {{"density", dens},
                     {"lambda", disorder.lambda},
                     {"masterSeed", disorder.master_seed}};
    j["fermi"] = {{"mu", fermi.mu}, {"T", fermi.temperature}};
    if (sweep) j["sweep"] = {{"mu", sweep->mu}, {"T", sweep->t}};
    j["realizations"] = realizations;
    json binning = {{"bins", bins}};
    if (bin_lo) {
        binning["lo"] = *bin_lo;
        binning["hi"] = *bin_hi;
    }
    j["binning"] = binning;
    if (field) {
        json f;
        switch (field->kind) {
        case response::FieldProfile::Kind::gaussian:
            f = {{"type", "gaussian"},
                 {"nu0", field->center},
                 {"width", field->scale},
                 {"amplitude", field->amplitude}};
            break;
        case response::FieldProfile::Kind::lorentzian:
            f = {{"type", "lorentzian"},
                 {"nu0", field->center},
                 {"gamma", field->scale},
                 {"amplitude", field->amplitude}};
            break;
        case response::FieldProfile::Kind::tabulated: {
            std::vector<double> re, im;
            for (auto& v : field->table_values) {
                re.push_back(v.real());
                im.push_back(v.imag());
            }
            f = {{"type", "tabulated"}, {"nu", field->table_nu}, {"re", re}, {"im", im}};
            break;
        }
        }
        j["field"] = f;
        j["times"] = {{"t0", times.t0}, {"t1", times.t1}, {"count", times.count}};
        j["eta"] = eta;
    }
    if (task == "diag-decay" || !diag.l_list.empty() || !diag.nu_grid.empty()) {
        json d = {{"muLo", diag.mu_lo}, {"muHi", diag.mu_hi}, {"muCount", diag.mu_count}};
        if (!diag.l_list.empty()) d["lList"] = diag.l_list;
        if (!diag.nu_grid.empty()) d["nuGrid"] = diag.nu_grid;
        j["diag"] = d;
    }
    if (task == "sigma") {
        json bands = json::array();
        for (auto& [lo, hi] : summary_bands) bands.push_back({lo, hi});
        j["summaryBands"] = bands;
    }
    if (!out_dir.empty()) j["output"] = out_dir;
    return j;
}

RunConfig RunConfig::from_json(const json& j) {
    RunConfig cfg;
    cfg.task = optional_or<std::string>(j, "task", "sigma");
    cfg.lattice.d = require<int>(j, "lattice.d");
    cfg.lattice.length = require<int>(j, "lattice.L");
    cfg.lattice.boundary =
        model::boundary_from_string(optional_or<std::string>(j, "lattice.boundary", "dirichlet"));
    const std::string kind = require<std::string>(j, "disorder.density.type");
    if (kind == "uniform") {
        cfg.disorder.density.kind = model::DensityKind::uniform;
        cfg.disorder.density.width = require<double>(j, "disorder.density.W");
    } else if (kind == "discrete") {
        cfg.disorder.density.kind = model::DensityKind::discrete;
        cfg.disorder.density.values =
            require<std::vector<double>>(j, "disorder.density.values");
        cfg.disorder.density.probabilities =
            require<std::vector<double>>(j, "disorder.density.probabilities");
    } else {
        throw ConfigError("unknown density '" + kind + "'", "disorder.density.type");
    }
    cfg.disorder.lambda = optional_or<double>(j, "disorder.lambda", 1.0);
    cfg.disorder.master_seed = optional_or<std::uint64_t>(j, "disorder.masterSeed", 0);
    cfg.fermi.mu = optional_or<double>(j, "fermi.mu", 0.0);
    cfg.fermi.temperature = optional_or<double>(j, "fermi.T", 0.0);
    if (find_path(j, "sweep")) {
        SweepSpec s;
        s.mu = optional_or<std::vector<double>>(j, "sweep.mu", {cfg.fermi.mu});
        s.t = optional_or<std::vector<double>>(j, "sweep.T", {cfg.fermi.temperature});
        cfg.sweep = s;
    }
    cfg.realizations = optional_or<int>(j, "realizations", 1);
    cfg.bins = optional_or<int>(j, "binning.bins", 400);
    if (find_path(j, "binning.lo")) {
        cfg.bin_lo = require<double>(j, "binning.lo");
        cfg.bin_hi = require<double>(j, "binning.hi");
    }
    if (find_path(j, "field")) {
        const std::string fk = require<std::string>(j, "field.type");
        if (fk == "gaussian")
            cfg.field = response::FieldProfile::gaussian(
                require<double>(j, "field.nu0"), require<double>(j, "field.width"),
                optional_or<double>(j, "field.amplitude", 1.0));
        else if (fk == "lorentzian")
            cfg.field = response::FieldProfile::lorentzian(
                require<double>(j, "field.nu0"), require<double>(j, "field.gamma"),
                optional_or<double>(j, "field.amplitude", 1.0));
        else if (fk == "tabulated") {
            auto nu = require<std::vector<double>>(j, "field.nu");
            auto re = require<std::vector<double>>(j, "field.re");
            auto im = optional_or<std::vector<double>>(j, "field.im",
                                                       std::vector<double>(nu.size(), 0.0));
            if (re.size() != nu.size() || im.size() != nu.size())
                throw ConfigError("mismatched table lengths", "field");
            std::vector<std::complex<double>> vals(nu.size());
            for (std::size_t i = 0; i < nu.size(); ++i) vals[i] = {re[i], im[i]};
            cfg.field = response::FieldProfile::tabulated(std::move(nu), std::move(vals));
        } else {
            throw ConfigError("unknown field '" + fk + "'", "field.type");
        }
        cfg.times.t0 = optional_or<double>(j, "times.t0", 0.0);
        cfg.times.t1 = optional_or<double>(j, "times.t1", 10.0);
        cfg.times.count = optional_or<int>(j, "times.count", 101);
        cfg.eta = optional_or<double>(j, "eta", 0.0);
    }
    cfg.diag.mu_lo = optional_or<double>(j, "diag.muLo", -0.5);
    cfg.diag.mu_hi = optional_or<double>(j, "diag.muHi", 0.5);
    cfg.diag.mu_count = optional_or<int>(j, "diag.muCount", 21);
    cfg.diag.l_list = optional_or<std::vector<int>>(j, "diag.lList", {});
    cfg.diag.nu_grid = optional_or<std::vector<double>>(j, "diag.nuGrid", {});
    if (find_path(j, "summaryBands")) {
        cfg.summary_bands.clear();
        for (auto& b : (*find_path(j, "summaryBands"))) {
            if (!b.is_array() || b.size() != 2)
                throw ConfigError("bands are [lo, hi] pairs", "summaryBands");
            cfg.summary_bands.emplace_back(b[0].get<double>(), b[1].get<double>());
        }
    }
    cfg.out_dir = optional_or<std::string>(j, "output", "");
    cfg.validate();
    return cfg;
}

void apply_override(json& config, const std::string& assignment) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("overrides look like path.to.key=value", "--set");
    const std::string path = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(raw);
    } catch (const json::exception&) {
        value = raw; // unquoted strings
    }
    json* cur = &config;
    std::size_t pos = 0;
    while (true) {
        std::size_t dot = path.find('.', pos);
        std::string key = path.substr(pos, dot == std::string::npos ? dot : dot - pos);
        if (key.empty()) throw ConfigError("empty path segment", "--set " + path);
        if (dot == std::string::npos) {
            if (cur->contains(key)) {
                const json& old = (*cur)[key];
                const bool both_num = old.is_number() && value.is_number();
                if (!both_num && old.type() != value.type())
                    throw ConfigError("override type mismatch", path);
            }
            (*cur)[key] = value;
            return;
        }
        if (!cur->contains(key)) (*cur)[key] = json::object();
        if (!(*cur)[key].is_object()) throw ConfigError("not an object", path);
        cur = &(*cur)[key];
        pos = dot + 1;
    }
}

std::vector<WorkUnit> plan(const RunConfig& cfg) {
    cfg.validate();
    std::vector<WorkUnit> units;
    units.reserve(cfg.realizations);
    for (int i = 0; i < cfg.realizations; ++i)
        units.push_back({i, CounterRng::derive_key(cfg.disorder.master_seed,
                                                   static_cast<std::uint64_t>(i))});
    return units;
}

json UnitResult::to_json() const {
    json j;
    j["index"] = index;
    j["seed"] = seed;
    j["blocks"] = blocks;
    j["scalars"] = scalars;
    return j;
}

UnitResult UnitResult::from_json(const json& j) {
    UnitResult u;
    u.index = j.at("index").get<int>();
    u.seed = j.at("seed").get<std::uint64_t>();
    u.blocks = j.at("blocks").get<std::map<std::string, std::vector<double>>>();
    u.scalars = j.at("scalars").get<std::map<std::string, double>>();
    return u;
}

UnitResult compute_unit(const RunConfig& cfg, int index) {
    UnitResult unit;
    unit.index = index;
    unit.seed = CounterRng::derive_key(cfg.disorder.master_seed,
                                       static_cast<std::uint64_t>(index));

    auto h = model::make_realization(cfg.lattice, cfg.disorder, index);
    auto eig = spectral::diagonalize(h);
    eig.meta.master_seed = cfg.disorder.master_seed;
    eig.meta.spec_hash = cfg.hash();
    const long n = eig.size();

    if (cfg.task == "dos") {
        auto dos = spectral::dos_measure(eig);
        unit.blocks["dos"] = dos.to_binned(cfg.energy_grid()).masses;
        unit.scalars["total_mass"] =
            static_cast<double>(dos.point_nu.size()) * (1.0 / static_cast<double>(n));
        auto vel = velocity_for(cfg, h);
        auto psi = kubo::psi_diagonal_measure(eig, vel);
        unit.blocks["psi"] = psi.to_binned(cfg.energy_grid()).masses;
        unit.scalars["psi_mass"] = psi.point_mass();
        return unit;
    }

    if (cfg.task == "phi") {
        auto vel = velocity_for(cfg, h);
        auto phi = kubo::phi_measure(eig, vel);
        unit.blocks["frequency"] = phi.frequency_profile(cfg.frequency_grid()).masses;
        unit.blocks["marginal"] = phi.marginal(cfg.energy_grid()).masses;
        unit.scalars["total_mass"] = phi.total_mass();
        unit.scalars["marginal_asymmetry"] = phi.max_marginal_asymmetry(cfg.energy_grid());
        return unit;
    }

    if (cfg.task == "sigma") {
        auto vel = velocity_for(cfg, h);
        auto x1 = model::position_operator(cfg.lattice);
        auto phi = kubo::phi_measure(eig, vel);
        auto psi = kubo::psi_from_phi(phi, kubo::degeneracy_eps(phi.values));
        PairMeasure xw;
        if (cfg.lattice.boundary == model::Boundary::dirichlet)
            xw = kubo::pair_weights(eig, x1);
        const BinGrid grid = cfg.frequency_grid();
        const double eps = kubo::degeneracy_eps(phi.values);
        Eigen::VectorXd occ(n);

        auto points = sweep_points(cfg);
        for (std::size_t g = 0; g < points.size(); ++g) {
            const auto& p = points[g];
            const std::string prefix = cfg.sweep ? sweep_label(g) + "." : "";
            for (long i = 0; i < n; ++i) occ[i] = spectral::fermi(eig.eigenvalues[i], p);

            std::vector<double> bins(grid.count, 0.0);
            const double gamma_mass = kernels::gamma_bin_accumulate(
                eig.eigenvalues.data(), occ.data(), phi.weights.data(),
                static_cast<int>(n), eps, &grid, bins.data());
            const double atom = kubo::atom_weight(psi, p).value;

            unit.blocks[prefix + "gamma"] = std::move(bins);
            unit.scalars[prefix + "atom"] = atom;
            unit.scalars[prefix + "gamma_mass"] = gamma_mass;
            unit.scalars[prefix + "total_mass"] = atom + gamma_mass;
            if (cfg.lattice.boundary == model::Boundary::dirichlet) {
                auto mc = kubo::mass_two_path_check(eig, vel, x1, p);
                unit.scalars[prefix + "mass_a"] = mc.mass_a;
                unit.scalars[prefix + "mass_b"] = mc.mass_b;
            }
            for (std::size_t b = 0; b < cfg.summary_bands.size(); ++b) {
                const auto& [lo, hi] = cfg.summary_bands[b];
                unit.scalars[prefix + "band" + std::to_string(b) + "_mass"] =
                    kernels::gamma_interval_mass(eig.eigenvalues.data(), occ.data(),
                                                 phi.weights.data(), static_cast<int>(n),
                                                 eps, lo, hi);
            }
        }
        return unit;
    }

    if (cfg.task == "current") {
        auto vel = velocity_for(cfg, h);
        kubo::SigmaOptions opts;
        opts.collect_points = true;
        auto sigma = kubo::sigma_measure(eig, vel, cfg.fermi, opts);
        auto times = response::uniform_times(cfg.times.t0, cfg.times.t1, cfg.times.count);
        response::CurrentTrace trace =
            cfg.eta > 0.0
                ? response::adiabatic_current_in_phase(sigma, *cfg.field, cfg.eta, times,
                                                       response::default_nu_grid(*cfg.field))
                : response::in_phase_current(sigma, *cfg.field, times);
        unit.blocks["J"] = trace.values;
        unit.blocks["imag_residual"] = trace.imag_residual;
        return unit;
    }

    if (cfg.task == "diag-decay") {
        unit.blocks["decay"] = diagnostics::decay_profile_single(
            eig, cfg.lattice, cfg.diag.mu_lo, cfg.diag.mu_hi, cfg.diag.mu_count);
        return unit;
    }

    throw ConfigError("unknown task '" + cfg.task + "'", "task");
}

std::map<std::string, Axis> axes_for(const RunConfig& cfg) {
    std::map<std::string, Axis> axes;
    auto bins_axis = [](const BinGrid& g) {
        Axis a;
        a.kind = "bins";
        a.edges = g.edges();
        return a;
    };
    if (cfg.task == "dos") {
        axes["dos"] = bins_axis(cfg.energy_grid());
        axes["psi"] = bins_axis(cfg.energy_grid());
    } else if (cfg.task == "phi") {
        axes["frequency"] = bins_axis(cfg.frequency_grid());
        axes["marginal"] = bins_axis(cfg.energy_grid());
    } else if (cfg.task == "sigma") {
        if (cfg.sweep) {
            const std::size_t k = sweep_points(cfg).size();
            for (std::size_t g = 0; g < k; ++g)
                axes[sweep_label(g) + ".gamma"] = bins_axis(cfg.frequency_grid());
        } else {
            axes["gamma"] = bins_axis(cfg.frequency_grid());
        }
    } else if (cfg.task == "current") {
        Axis a;
        a.kind = "points";
        a.points = response::uniform_times(cfg.times.t0, cfg.times.t1, cfg.times.count);
        axes["J"] = a;
        axes["imag_residual"] = a;
    } else if (cfg.task == "diag-decay") {
        Axis a;
        a.kind = "points";
        for (int k = 0; k <= cfg.lattice.length / 2 - 1; ++k)
            a.points.push_back(k);
        axes["decay"] = a;
    }
    return axes;
}

EnsembleEstimate reduce(const RunConfig& cfg, const std::vector<UnitResult>& units) {
    EnsembleEstimate est;
    est.axes = axes_for(cfg);
    for (auto& [name, axis] : est.axes)
        est.blocks[name] = std::vector<Welford>(axis.size());

    for (const auto& unit : units) {
        for (auto& [name, values] : unit.blocks) {
            auto it = est.blocks.find(name);
            if (it == est.blocks.end() || it->second.size() != values.size())
                throw NumericalError("unit " + std::to_string(unit.index) +
                                     " has unexpected block '" + name + "'");
            for (std::size_t i = 0; i < values.size(); ++i) it->second[i].add(values[i]);
        }
        for (auto& [name, v] : unit.scalars) est.scalars[name].add(v);
    }
    est.n_realizations = static_cast<int>(units.size());

    est.meta["artifact_version"] = kVersion;
    char hex[32];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(cfg.hash()));
    est.meta["config_hash"] = hex;
    est.meta["master_seed"] = cfg.disorder.master_seed;
    est.meta["task"] = cfg.task;
    est.meta["n_realizations"] = est.n_realizations;
    if (cfg.sweep) {
        json pts = json::array();
        auto points = sweep_points(cfg);
        for (std::size_t g = 0; g < points.size(); ++g)
            pts.push_back({{"label", sweep_label(g)},
                           {"mu", points[g].mu},
                           {"T", points[g].temperature}});
        est.meta["sweep_points"] = pts;
    }
    return est;
}

json EnsembleEstimate::to_json(bool with_timestamp) const {
    json j;
    j["meta"] = meta;
    if (with_timestamp) j["meta"]["timestamp"] = io::iso_timestamp();
    json jaxes;
    for (auto& [name, axis] : axes) {
        json a = {{"kind", axis.kind}};
        if (axis.kind == "bins") a["edges"] = axis.edges;
        else a["points"] = axis.points;
        jaxes[name] = a;
    }
    j["axes"] = jaxes;
    json jblocks;
    for (auto& [name, cells] : blocks) {
        std::vector<double> mean, se;
        mean.reserve(cells.size());
        se.reserve(cells.size());
        for (auto& w : cells) {
            mean.push_back(w.mean);
            se.push_back(w.stderr_());
        }
        jblocks[name] = {{"mean", mean}, {"stderr", se}};
    }
    j["blocks"] = jblocks;
    json jscalars;
    for (auto& [name, w] : scalars)
        jscalars[name] = {{"mean", w.mean}, {"stderr", w.stderr_()}, {"count", w.n}};
    j["scalars"] = jscalars;
    return j;
}

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("KUBOLAB_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

EnsembleEstimate run(const RunConfig& cfg, const RunOptions& opts) {
    auto units_plan = plan(cfg);
    const bool persist = !cfg.out_dir.empty() && opts.write_outputs;

    fs::path dir(cfg.out_dir);
    if (persist) {
        fs::create_directories(dir / "units");
        io::write_text_file(dir / "config.json", cfg.to_json().dump(2) + "\n");
    }

    std::vector<UnitResult> results(units_plan.size());
    std::vector<char> done(units_plan.size(), 0);

    if (persist && opts.resume) {
        for (const auto& u : units_plan) {
            fs::path p = dir / "units" / io::unit_filename(u.index);
            if (fs::exists(p)) {
                results[u.index] = UnitResult::from_json(io::read_json_file(p));
                done[u.index] = 1;
            }
        }
    }

    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::vector<std::pair<int, std::string>> failures;

    auto worker = [&]() {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= units_plan.size()) return;
            if (done[i]) continue;
            try {
                UnitResult u = compute_unit(cfg, units_plan[i].index);
                if (persist)
                    io::write_text_file(dir / "units" / io::unit_filename(u.index),
                                        u.to_json().dump(2) + "\n");
                results[i] = std::move(u);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(err_mutex);
                failures.emplace_back(units_plan[i].index, e.what());
            }
        }
    };

    const int nthreads =
        std::min<int>(resolve_threads(opts.threads), static_cast<int>(units_plan.size()));
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    if (!failures.empty()) {
        std::string msg = "work units failed:";
        for (auto& [idx, what] : failures)
            msg += " [" + std::to_string(idx) + "] " + what + ";";
        msg += " completed units are checkpointed, rerun with resume";
        throw NumericalError(msg);
    }

    EnsembleEstimate est = reduce(cfg, results);
    if (persist) {
        io::write_text_file(dir / "result.json", est.to_json().dump(2) + "\n");
        io::write_estimate_csv(dir, cfg.task, est);
    }
    return est;
}

std::vector<TuvRow> trace_per_unit_volume_convergence(const RunConfig& base,
                                                      const std::vector<int>& l_list) {
    std::vector<TuvRow> rows;
    for (int l : l_list) {
        RunConfig cfg = base;
        cfg.lattice.length = l;
        cfg.lattice.validate();
        TuvRow row;
        row.l = l;
        Welford center, volume, gap, route_gap;
        for (int r = 0; r < cfg.realizations; ++r) {
            auto h = model::make_realization(cfg.lattice, cfg.disorder, r);
            auto eig = spectral::diagonalize(h);
            const long n = eig.size();
            Eigen::VectorXd occ = spectral::fermi_values(eig, cfg.fermi);
            // site-basis diagonal of f(H)
            Eigen::VectorXd site_diag = Eigen::VectorXd::Zero(n);
            for (long m = 0; m < n; ++m)
                site_diag += occ[m] * eig.eigenvectors.col(m).cwiseAbs2();
            const double vol_avg = site_diag.sum() / n;
            const double spectral_avg = occ.sum() / n;
            const double c = site_diag[cfg.lattice.center_site()];
            center.add(c);
            volume.add(vol_avg);
            gap.add(std::abs(c - vol_avg));
            route_gap.add(std::abs(vol_avg - spectral_avg));
        }
        row.center_mean = center.mean;
        row.volume_mean = volume.mean;
        row.center_gap_mean = gap.mean;
        row.trace_route_gap = route_gap.mean;
        if (cfg.disorder.lambda == 0.0) {
            auto oracle = diagnostics::free_oracle(cfg.lattice.d, l, 3);
            double s = 0;
            for (std::size_t i = 0; i < oracle.dos.point_nu.size(); ++i)
                s += oracle.dos.point_w[i] *
                     spectral::fermi(oracle.dos.point_nu[i], cfg.fermi);
            row.fourier_value = s;
        }
        rows.push_back(row);
    }
    return rows;
}

} // namespace kubolab::ensemble
