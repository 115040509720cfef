#include "kubolab/cli.hpp"

#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "kubolab/diagnostics.hpp"
#include "kubolab/io.hpp"
#include "kubolab/kernels.hpp"
#include "kubolab/kubo.hpp"
#include "kubolab/rng.hpp"

namespace kubolab::checks {

using ensemble::RunConfig;

std::vector<CheckResult> identity_suite(const RunConfig& cfg) {
    std::vector<CheckResult> out;
    auto record = [&](const std::string& name, bool pass, const std::string& detail = "") {
        out.push_back({name, pass, detail});
    };

    for (int r = 0; r < cfg.realizations; ++r) {
        const std::string tag = "[" + std::to_string(r) + "] ";
        auto h = model::make_realization(cfg.lattice, cfg.disorder, r);
        auto eig = spectral::diagonalize(h);
        auto x1 = model::position_operator(cfg.lattice);
        auto vel = model::velocity_operator(h, x1);
        const long n = eig.size();

        {
            Eigen::MatrixXcd v = vel.complex_matrix();
            double herm = (v - v.adjoint()).cwiseAbs().maxCoeff();
            record(tag + "velocity-hermitian", herm == 0.0, io::format_double(herm));
        }
        {
            auto hop = model::hopping_velocity(cfg.lattice);
            double diff = (vel.mat - hop.mat).cwiseAbs().maxCoeff();
            record(tag + "velocity-equals-hopping", diff == 0.0, io::format_double(diff));
        }
        {
            const double expect = 2.0 * (1.0 - 1.0 / cfg.lattice.length);
            const double got = vel.frobenius_mass_per_site();
            record(tag + "bond-count-mass", std::abs(got - expect) <= 1e-12,
                   io::format_double(got));
        }

        auto phi = kubo::phi_measure(eig, vel);
        {
            double asym = phi.max_marginal_asymmetry(cfg.energy_grid());
            record(tag + "marginals-coincide", asym <= 1e-12, io::format_double(asym));
        }

        kubo::SigmaOptions opts;
        opts.grid = cfg.frequency_grid();
        opts.collect_points = true;
        auto sigma = kubo::sigma_from_phi(phi, cfg.fermi, opts);
        {
            double mn = 0.0;
            for (double w : sigma.point_w) mn = std::min(mn, w);
            for (double m : sigma.binned->masses) mn = std::min(mn, m);
            record(tag + "positivity", mn >= 0.0, io::format_double(mn));
        }
        {
            const double eps = kubo::degeneracy_eps(phi.values);
            double nearest = 1e300;
            for (double nu : sigma.point_nu) nearest = std::min(nearest, std::abs(nu));
            record(tag + "no-off-zero-mass-at-zero", nearest > eps,
                   io::format_double(nearest));
        }
        {
            double defect = SpectralMeasure::evenness_defect(*sigma.binned);
            record(tag + "evenness", defect <= 1e-12, io::format_double(defect));
        }

        for (double t : {cfg.fermi.temperature, 0.0}) {
            spectral::FermiParams p{cfg.fermi.mu, t};
            auto mc = kubo::mass_two_path_check(eig, vel, x1, p);
            const double tol = 1e-8 * (1.0 + std::abs(mc.mass_a));
            record(tag + "two-route-mass(T=" + io::format_double(t) + ")",
                   std::abs(mc.mass_a - mc.mass_b) <= tol,
                   io::format_double(mc.mass_a - mc.mass_b));
        }
        {
            auto x1_shift = x1;
            x1_shift.mat.diagonal().array() += 7.0;
            spectral::FermiParams p = cfg.fermi;
            auto a = kubo::mass_two_path_check(eig, vel, x1, p);
            auto b = kubo::mass_two_path_check(eig, vel, x1_shift, p);
            const double tol = 1e-12 * (1.0 + std::abs(a.mass_a));
            record(tag + "offset-invariance", std::abs(a.mass_a - b.mass_a) <= tol,
                   io::format_double(a.mass_a - b.mass_a));
        }
        {
            auto dos = spectral::dos_measure(eig);
            const double total =
                static_cast<double>(dos.point_nu.size()) * (1.0 / static_cast<double>(n));
            record(tag + "counting-measure-normalized", total == 1.0,
                   io::format_double(total));
        }
        {
            auto psi = kubo::psi_diagonal_measure(eig, vel);
            auto pb = psi.to_binned(cfg.energy_grid());
            auto db = spectral::dos_measure(eig).to_binned(cfg.energy_grid());
            bool ok = true;
            for (int i = 0; i < pb.grid.count; ++i)
                ok = ok && pb.masses[i] <= 4.0 * M_PI * db.masses[i] + 1e-15;
            record(tag + "zero-frequency-domination", ok);
        }
    }

    {
        CounterRng rng(cfg.disorder.master_seed, 0xfeed);
        bool ok = true;
        for (int i = 0; i < 64; ++i) {
            double a = -3.0 + 6.0 * rng.next_double();
            double b = -3.0 + 6.0 * rng.next_double();
            ok = ok && kubo::kernel_f(a, b, cfg.fermi, 0.0) ==
                           kubo::kernel_f(b, a, cfg.fermi, 0.0);
        }
        out.push_back({"kernel-symmetry", ok, ""});
    }
    return out;
}

std::vector<CheckResult> free_suite() {
    std::vector<CheckResult> out;
    auto rep = [&](const std::string& name, bool pass, const std::string& detail) {
        out.push_back({name, pass, detail});
    };

    {
        auto oracle = diagnostics::free_oracle(1, 8, 3);
        const double at_zero = oracle.psi.mass_in(-1e-12, 1e-12);
        rep("oracle-mode-pair-weight", std::abs(at_zero - M_PI) <= 1e-12,
            io::format_double(at_zero));
        rep("oracle-total-weight", std::abs(oracle.psi.point_mass() - 2.0 * M_PI) <= 1e-12,
            io::format_double(oracle.psi.point_mass()));
    }
    for (auto [d, l] : {std::pair{1, 64}, std::pair{2, 12}}) {
        auto r = diagnostics::free_consistency(d, l, 0.0, 0.0);
        rep("clean-pipeline(d=" + std::to_string(d) + ")", r.pass, r.detail);
    }
    {
        auto r = diagnostics::free_consistency(1, 64, 3.0, 0.0);
        const double total = r.atom_pipeline + r.gamma_mass;
        rep("outside-band-mass", total <= 1e-10, io::format_double(total));
    }
    return out;
}

} // namespace kubolab::checks

namespace kubolab::cli {

namespace {

using ensemble::json;
using ensemble::RunConfig;

struct CommonOpts {
    std::string config_path;
    std::string out;
    std::vector<std::string> sets;
    std::uint64_t seed = 0;
    bool seed_given = false;
    int threads = 0;
    bool resume = false;
    bool json_errors = false;
    bool svg = false;
    bool verbose = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "JSON configuration file");
    cmd->add_option("--set", o.sets, "dotted-path override, e.g. fermi.T=0.2");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--seed", o.seed, "master seed override")
        ->each([&](const std::string&) { o.seed_given = true; });
    cmd->add_option("--threads", o.threads, "worker cap (default KUBOLAB_THREADS)");
    cmd->add_flag("--resume", o.resume, "reuse completed unit files");
    cmd->add_flag("--json", o.json_errors, "machine-readable errors on stderr");
    cmd->add_flag("--svg", o.svg, "emit a chart next to the CSV output");
    cmd->add_flag("--verbose,-v", o.verbose, "chatty progress output");
}

json load_config_json(const CommonOpts& o) {
    json j = json::object();
    if (!o.config_path.empty()) j = io::read_json_file(o.config_path);
    for (const auto& s : o.sets) ensemble::apply_override(j, s);
    if (o.seed_given) j["disorder"]["masterSeed"] = o.seed;
    if (!o.out.empty()) j["output"] = o.out;
    return j;
}

RunConfig make_config(const CommonOpts& o, const std::string& task) {
    json j = load_config_json(o);
    j["task"] = task;
    return RunConfig::from_json(j);
}

void maybe_svg(const RunConfig& cfg, const ensemble::EnsembleEstimate& est,
               const CommonOpts& o) {
    if (!o.svg || cfg.out_dir.empty()) return;
    std::string primary = cfg.task == "dos"          ? "dos"
                          : cfg.task == "phi"        ? "frequency"
                          : cfg.task == "current"    ? "J"
                          : cfg.task == "diag-decay" ? "decay"
                                                     : "gamma";
    auto it = est.blocks.find(primary);
    if (it == est.blocks.end() && !est.blocks.empty()) it = est.blocks.begin();
    if (it == est.blocks.end()) return;
    const auto& axis = est.axes.at(it->first);
    std::vector<double> mean;
    for (auto& w : it->second) mean.push_back(w.mean);
    std::string svg = axis.kind == "bins"
                          ? io::svg_step_chart(axis.edges, mean, cfg.task)
                          : io::svg_line_chart(axis.points, mean, cfg.task);
    io::write_text_file(std::filesystem::path(cfg.out_dir) / "result.svg", svg);
}

int run_ensemble_task(const CommonOpts& o, const std::string& task) {
    RunConfig cfg = make_config(o, task);
    if (task == "current" && !cfg.field)
        throw ConfigError("current task needs a field profile", "field");
    if (o.verbose)
        std::cout << "task " << task << ", N = " << cfg.lattice.sites() << ", "
                  << cfg.realizations << " realizations, kernels: "
                  << kernels::backend_name() << "\n";
    ensemble::RunOptions ro;
    ro.threads = o.threads;
    ro.resume = o.resume;
    auto est = ensemble::run(cfg, ro);
    maybe_svg(cfg, est, o);
    for (auto& [name, w] : est.scalars)
        std::cout << name << " = " << io::format_double(w.mean) << " +- "
                  << io::format_double(w.stderr_()) << "\n";
    if (!cfg.out_dir.empty())
        std::cout << "results in " << cfg.out_dir << "\n";
    return 0;
}

int run_sweep(const CommonOpts& o) {
    RunConfig cfg = make_config(o, "sigma");
    if (!cfg.sweep || cfg.sweep->mu.empty() || cfg.sweep->t.empty())
        throw ConfigError("sweep needs non-empty sweep.mu / sweep.T grids", "sweep");
    ensemble::RunOptions ro;
    ro.threads = o.threads;
    ro.resume = o.resume;
    auto est = ensemble::run(cfg, ro);
    std::cout << est.meta["sweep_points"].size() << " grid points, "
              << est.n_realizations << " shared realizations\n";
    if (!cfg.out_dir.empty()) std::cout << "results in " << cfg.out_dir << "\n";
    return 0;
}

int run_free_oracle(int d, int l, const CommonOpts& o) {
    auto res = diagnostics::free_oracle(d, l);
    // group degenerate modes for the printed table
    std::vector<std::size_t> order(res.psi.point_nu.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return res.psi.point_nu[a] < res.psi.point_nu[b];
    });
    const double eps = 1e-9 * 4.0 * d;
    std::vector<std::pair<double, double>> rows;
    for (std::size_t i : order) {
        const double e = res.psi.point_nu[i];
        const double w = res.psi.point_w[i];
        if (!rows.empty() && e - rows.back().first <= eps) rows.back().second += w;
        else rows.emplace_back(e, w);
    }
    std::ostringstream table;
    table << "energy,weight\n";
    for (auto& [e, w] : rows)
        table << io::format_double(std::abs(e) < 1e-12 ? 0.0 : e) << ','
              << io::format_double(w) << '\n';
    if (!o.out.empty()) {
        std::filesystem::create_directories(o.out);
        io::write_text_file(std::filesystem::path(o.out) / "psi_points.csv", table.str());
        std::ostringstream grid;
        grid << "energy,psi_density,dos_density\n";
        for (std::size_t i = 0; i < res.grid_e.size(); ++i)
            grid << io::format_double(res.grid_e[i]) << ','
                 << io::format_double(res.grid_psi_density[i]) << ','
                 << io::format_double(res.grid_dos_density[i]) << '\n';
        io::write_text_file(std::filesystem::path(o.out) / "psi_density.csv", grid.str());
        std::cout << "results in " << o.out << "\n";
    } else {
        std::cout << table.str();
    }
    return 0;
}

int report_checks(const std::vector<checks::CheckResult>& results) {
    int failed = 0;
    for (const auto& r : results) {
        std::cout << (r.pass ? "ok   " : "FAIL ") << r.name;
        if (!r.detail.empty()) std::cout << "  (" << r.detail << ")";
        std::cout << "\n";
        failed += r.pass ? 0 : 1;
    }
    std::cout << (failed == 0 ? "all checks passed\n"
                              : std::to_string(failed) + " check(s) failed\n");
    return failed == 0 ? 0 : 3;
}

RunConfig default_check_config() {
    json j = {{"task", "sigma"},
              {"lattice", {{"d", 1}, {"L", 64}, {"boundary", "dirichlet"}}},
              {"disorder",
               {{"density", {{"type", "uniform"}, {"W", 2.0}}},
                {"lambda", 1.0},
                {"masterSeed", 1}}},
              {"fermi", {{"mu", 0.0}, {"T", 0.2}}},
              {"realizations", 2}};
    return RunConfig::from_json(j);
}

int run_diag(const std::string& kind, const CommonOpts& o) {
    if (kind == "decay") {
        RunConfig cfg = make_config(o, "diag-decay");
        ensemble::RunOptions ro;
        ro.threads = o.threads;
        ro.resume = o.resume;
        auto est = ensemble::run(cfg, ro);
        diagnostics::DecayProfile prof;
        const auto& cells = est.blocks.at("decay");
        for (std::size_t k = 0; k < cells.size(); ++k) {
            prof.distances.push_back(static_cast<int>(k));
            prof.values.push_back(cells[k].mean);
        }
        diagnostics::fit_exponential(prof);
        json fit = {{"rate", prof.rate},
                    {"prefactor", prof.prefactor},
                    {"r2", prof.r2},
                    {"fit_ok", prof.fit_ok},
                    {"fit_range", {prof.fit_lo, prof.fit_hi}}};
        std::cout << "decay fit: " << fit.dump() << "\n";
        if (!cfg.out_dir.empty())
            io::write_text_file(std::filesystem::path(cfg.out_dir) / "decay_fit.json",
                                fit.dump(2) + "\n");
        return 0;
    }
    if (kind == "ynorm") {
        RunConfig cfg = make_config(o, "sigma");
        if (cfg.diag.l_list.empty())
            throw ConfigError("volume scan needs diag.lList", "diag.lList");
        diagnostics::YNormConfig yc;
        yc.d = cfg.lattice.d;
        yc.disorder = cfg.disorder;
        yc.mu = cfg.fermi.mu;
        yc.temperature = cfg.fermi.temperature;
        yc.l_list = cfg.diag.l_list;
        yc.realizations = cfg.realizations;
        auto rows = diagnostics::y_norm_growth(yc);
        std::ostringstream csv;
        csv << "L,mean,stderr\n";
        for (auto& r : rows)
            csv << r.l << ',' << io::format_double(r.mean) << ','
                << io::format_double(r.stderr_) << '\n';
        std::cout << csv.str();
        if (!cfg.out_dir.empty()) {
            std::filesystem::create_directories(cfg.out_dir);
            io::write_text_file(std::filesystem::path(cfg.out_dir) / "ynorm.csv", csv.str());
        }
        return 0;
    }
    if (kind == "mott") {
        RunConfig cfg = make_config(o, "sigma");
        ensemble::RunOptions ro;
        ro.threads = o.threads;
        ro.resume = o.resume;
        auto est = ensemble::run(cfg, ro);
        BinnedMeasure binned(cfg.frequency_grid());
        const auto& cells = est.blocks.at("gamma");
        for (std::size_t i = 0; i < cells.size(); ++i) binned.masses[i] = cells[i].mean;
        SpectralMeasure sigma;
        sigma.atom_at_zero = est.scalars.at("atom").mean;
        sigma.binned = binned;
        std::vector<double> grid = cfg.diag.nu_grid;
        if (grid.empty())
            for (double nu = 0.02; nu < 0.9; nu *= 1.35) grid.push_back(nu);
        auto rows = diagnostics::mott_probe(sigma, grid, cfg.lattice.d);
        std::ostringstream csv;
        csv << "nu,ratio\n";
        for (auto& r : rows)
            csv << io::format_double(r.nu) << ',' << io::format_double(r.ratio) << '\n';
        std::cout << csv.str();
        if (!cfg.out_dir.empty()) {
            std::filesystem::create_directories(cfg.out_dir);
            io::write_text_file(std::filesystem::path(cfg.out_dir) / "mott.csv", csv.str());
        }
        return 0;
    }
    if (kind == "free") return report_checks(checks::free_suite());
    throw ConfigError("unknown diagnostic '" + kind + "'", "--kind");
}

int dispatch(int argc, const char* const* argv) {
    CLI::App app{"finite-volume transport laboratory for disordered lattice models"};
    app.require_subcommand(1);

    CommonOpts o;
    std::string diag_kind, suite = "identities";
    int oracle_d = 1, oracle_l = 8;

    auto* dos = app.add_subcommand("dos", "eigenvalue counting measure ensemble");
    auto* phi = app.add_subcommand("phi", "velocity pair-weight ensemble");
    auto* sigma = app.add_subcommand("sigma", "conductivity measure ensemble");
    auto* current = app.add_subcommand("current", "linear-response current ensemble");
    auto* sweep = app.add_subcommand("sweep", "sigma over mu/T grids with shared seeds");
    auto* diag = app.add_subcommand("diag", "localization and volume diagnostics");
    auto* oracle = app.add_subcommand("free-oracle", "closed-form clean-system tables");
    auto* check = app.add_subcommand("check", "identity suites, exit 3 on failure");

    for (auto* cmd : {dos, phi, sigma, current, sweep, diag, oracle, check})
        add_common(cmd, o);
    diag->add_option("--kind", diag_kind, "decay|ynorm|mott|free")->required();
    oracle->add_option("--d", oracle_d, "dimension");
    oracle->add_option("--L", oracle_l, "side length");
    check->add_option("--suite", suite, "identities|free");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }

    try {
        if (dos->parsed()) return run_ensemble_task(o, "dos");
        if (phi->parsed()) return run_ensemble_task(o, "phi");
        if (sigma->parsed()) return run_ensemble_task(o, "sigma");
        if (current->parsed()) return run_ensemble_task(o, "current");
        if (sweep->parsed()) return run_sweep(o);
        if (diag->parsed()) return run_diag(diag_kind, o);
        if (oracle->parsed()) return run_free_oracle(oracle_d, oracle_l, o);
        if (check->parsed()) {
            if (suite == "identities") {
                RunConfig cfg = o.config_path.empty() && o.sets.empty()
                                    ? default_check_config()
                                    : make_config(o, "sigma");
                return report_checks(checks::identity_suite(cfg));
            }
            if (suite == "free") return report_checks(checks::free_suite());
            throw ConfigError("unknown suite '" + suite + "'", "--suite");
        }
    } catch (const ConfigError& e) {
        if (o.json_errors)
            std::cerr << json{{"error", {{"type", "config"},
                                         {"message", e.what()},
                                         {"field", e.field()}}}}
                             .dump()
                      << "\n";
        else
            std::cerr << "configuration error: " << e.what() << "\n";
        return 1;
    } catch (const CheckFailure& e) {
        std::cerr << "check failed: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        if (o.json_errors)
            std::cerr << json{{"error", {{"type", "numerical"}, {"message", e.what()}}}}
                             .dump()
                      << "\n";
        else
            std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

} // namespace

int run(int argc, const char* const* argv) { return dispatch(argc, argv); }

} // namespace kubolab::cli
