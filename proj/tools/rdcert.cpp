// rdcert: command-line front end for the reaction-diffusion certification toolkit.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "rdcert/config.hpp"
#include "rdcert/kf_search.hpp"
#include "rdcert/pipeline.hpp"
#include "rdcert/report.hpp"
#include "rdcert/sdp_solver.hpp"
#include "rdcert/simulator.hpp"

namespace fs = std::filesystem;
using namespace rdcert;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitConfig = 2;

struct Options {
    std::string config;
    std::string out;
    std::uint64_t seed = 20240521;
    unsigned jobs = 1;
    std::optional<double> kf;
};

struct Context {
    Setup setup;
    fs::path out;
    std::string hash;
    std::uint64_t seed;
    unsigned jobs;
};

// Problems the user fixes by editing the config, as opposed to failed verdicts.
bool is_configuration_problem(const Error& e) {
    return dynamic_cast<const ConfigurationError*>(&e) || dynamic_cast<const CoefficientSignError*>(&e) ||
           dynamic_cast<const ResolutionError*>(&e) || dynamic_cast<const RangeError*>(&e) ||
           dynamic_cast<const ParameterError*>(&e);
}

Context make_context(const Options& o) {
    const RunConfig cfg = load_config(o.config);
    Context c{make_setup(cfg), fs::path(o.out.empty() ? cfg.output_dir : o.out),
              config_hash(cfg.source.dump(), o.seed), o.seed, std::max(1u, o.jobs)};
    fs::create_directories(c.out);
    return c;
}

int cmd_eigs(const Context& c) {
    write_text(c.out / "eigs.csv", eigs_csv(*c.setup.basis, c.hash));
    const auto& b = *c.setup.basis;
    std::cout << "eigenvalues:";
    for (std::size_t n = 1; n <= std::min<std::size_t>(6, b.n_max); ++n) std::cout << ' ' << num(b.lambda(n));
    std::cout << " ...\nwrote " << (c.out / "eigs.csv").string() << "\n";
    return kExitOk;
}

int cmd_gains(const Context& c) {
    const auto& cfg = c.setup.cfg;
    const ModalPlant plant = make_plant(c.setup, cfg.actuation, cfg.design.N, cfg.design.delta);
    const GainSet gains = make_gains(c.setup, plant, cfg.design.delta);
    const std::string rep = gains_report(plant, gains, c.hash);
    write_text(c.out / "gains.txt", rep);
    const ClosedLoopMatrices m = assemble(plant, gains);
    write_text(c.out / "F.csv", matrix_csv(m.F, c.hash, "F"));
    write_text(c.out / "Omega.csv", matrix_csv(m.Omega, c.hash, "Omega"));
    std::cout << rep;
    return kExitOk;
}

int cmd_certify(const Context& c, std::optional<double> kf_override) {
    const auto& cfg = c.setup.cfg;
    const CellInput in = make_cell(c.setup, cfg.actuation, cfg.design.N, cfg.design.delta);
    const double kf = kf_override.value_or(cfg.lmi.kf);
    const CertifyOutcome out = certify(in.mats, in.plant, in.gains, cfg.lmi.gamma, kf, solver_options(cfg, c.seed));
    std::cout << "theorem " << to_string(theorem_for(cfg.actuation)) << " N " << cfg.design.N << " kf " << num(kf)
              << " gamma " << num(cfg.lmi.gamma) << ": " << to_string(out.status) << "\n";
    if (out.certificate) {
        const std::string rep = certificate_report(*out.certificate, out.report, c.hash);
        write_text(c.out / "certificate.txt", rep);
        std::cout << rep;
        return out.report.pass ? kExitOk : kExitFailed;
    }
    std::string rep = "# config_hash " + c.hash + "\nverdict " + to_string(out.status) + "\nkf " + num(kf) +
                      "\ngamma " + num(cfg.lmi.gamma) + "\nbest_t " + num(out.solve.t) + "\nlower_bound " +
                      num(out.solve.lower_bound) + "\nmessage " + out.solve.message + "\n";
    write_text(c.out / "certificate.txt", rep);
    std::cout << rep;
    return kExitFailed;
}

int cmd_max_kf(const Context& c) {
    const auto& cfg = c.setup.cfg;
    const CellInput in = make_cell(c.setup, cfg.actuation, cfg.design.N, cfg.design.delta);
    const KfResult r = max_kf(in.mats, in.plant, in.gains, search_spec(cfg, c.seed));
    write_text(c.out / "maxkf.csv", maxkf_csv(r, c.hash));
    std::cout << "theorem " << to_string(r.theorem) << " N " << r.N << " delta " << num(r.delta) << " kf* "
              << num(r.kf_star) << " probes " << r.log.size() << " monotone " << (r.monotone ? "yes" : "no") << "\n";
    if (!r.diagnostic.empty()) std::cout << "diagnostic: " << r.diagnostic << "\n";
    if (r.certificate) {
        const LmiProblem prob = build_problem(in.mats, in.plant, in.gains, r.certificate->gamma, r.kf_star);
        write_text(c.out / "maxkf_certificate.txt",
                   certificate_report(*r.certificate, verify_certificate(*r.certificate, prob), c.hash));
    }
    return (r.certificate && r.monotone) ? kExitOk : kExitFailed;
}

int cmd_table1(const Context& c) {
    const auto& cfg = c.setup.cfg;
    Table1Spec spec;
    spec.Ns = cfg.search.N_values;
    spec.deltas = cfg.search.deltas;
    spec.search = search_spec(cfg, c.seed);
    spec.jobs = c.jobs;
    const Table1Result t = table1(table1_builder(c.setup), spec);
    write_text(c.out / "table1.csv", table1_csv(t, c.hash));
    bool ok = true;
    for (const auto& cell : t.cells) {
        std::cout << to_string(cell.theorem) << " N=" << cell.N << " kf*=" << num(cell.kf_star)
                  << " (delta " << num(cell.best_delta) << ", paper " << num(table1_reference(cell.theorem, cell.N))
                  << ")";
        if (!cell.error.empty()) std::cout << " errors: " << cell.error;
        std::cout << "\n";
        for (const auto& r : cell.per_delta) {
            ok = ok && r.monotone;
            if (r.delta == cell.best_delta && r.certificate) {
                const CellInput in = make_cell(c.setup, cell.theorem == Theorem::Two ? Actuation::Distributed
                                                                                     : Actuation::Boundary,
                                               cell.N, r.delta);
                const LmiProblem prob = build_problem(in.mats, in.plant, in.gains, r.certificate->gamma, r.kf_star);
                write_text(c.out / "table1_certificates" /
                               (to_string(cell.theorem) + "_N" + std::to_string(cell.N) + ".txt"),
                           certificate_report(*r.certificate, verify_certificate(*r.certificate, prob), c.hash));
            }
        }
    }
    const bool inc = row_increasing(t, Theorem::Two, 0.0) && row_increasing(t, Theorem::Three, 0.0);
    const bool dom = columns_dominate(t, 0.0);
    std::cout << "increasing in N: " << (inc ? "yes" : "no") << "; distributed >= boundary: " << (dom ? "yes" : "no")
              << "\nwrote " << (c.out / "table1.csv").string() << "\n";
    return ok ? kExitOk : kExitFailed;
}

int cmd_simulate(const Context& c) {
    const auto& cfg = c.setup.cfg;
    const CellInput in = make_cell(c.setup, cfg.actuation, cfg.design.N, cfg.design.delta);
    const SearchSpec spec = search_spec(cfg, c.seed);
    double kf_used = 0.0;
    std::optional<Certificate> cert;
    if (cfg.sim.kf_used) {
        kf_used = *cfg.sim.kf_used;
        cert = probe_kf(in.mats, in.plant, in.gains, kf_used, spec, spec.gamma_grid.size() / 2).certificate;
    } else {
        const KfResult r = max_kf(in.mats, in.plant, in.gains, spec);
        kf_used = cfg.sim.kf_fraction * r.kf_star;
        cert = r.certificate;
    }
    NonlinearitySpec nl;
    nl.qf = cfg.plant.qf;
    nl.kind = cfg.sim.g_kind;
    nl.kf_used = kf_used;
    Trajectory traj = run_simulation(make_sim_config(c.setup, in.plant, in.gains), nl);

    std::ostringstream rep;
    rep << "# config_hash " << c.hash << "\nactuation " << to_string(cfg.actuation) << "\nN " << cfg.design.N
        << "\ndelta " << num(cfg.design.delta) << "\ng_kind " << to_string(nl.kind) << "\nkf_used " << num(kf_used)
        << "\nsteps " << traj.steps << "\ndt_final " << num(traj.dt_final) << "\n";
    for (const auto& w : traj.warnings) rep << "warning " << w << "\n";
    bool ok = true;
    const auto energy = traj.energy();
    std::vector<double> norm(energy.size());
    for (std::size_t k = 0; k < energy.size(); ++k) norm[k] = std::sqrt(energy[k]);
    try {
        const double rate = decay_fit(traj.t, norm, cfg.sim.fit_window);
        rep << "fitted_rate " << num(rate) << "\nrate_check " << (rate >= 0.9 * cfg.design.delta ? "pass" : "fail")
            << "\n";
        ok = ok && rate >= 0.9 * cfg.design.delta;
    } catch (const FitError& e) {
        rep << "fitted_rate undefined (" << e.what() << ")\n";
        ok = false;
    }
    if (cert) {
        const LyapunovTrace lt = lyapunov_trace(traj, *cert, cfg.sim.tol_V);
        rep << "lyapunov_gamma " << num(cert->gamma) << "\nlyapunov_worst_ratio " << num(lt.worst_ratio)
            << "\nlyapunov_check " << (lt.pass ? "pass" : "fail") << "\n";
        ok = ok && lt.pass;
    } else {
        rep << "lyapunov_check skipped (no certificate at kf_used)\n";
        ok = false;
    }
    write_text(c.out / "trajectory.csv", trajectory_csv(traj, c.hash));
    write_text(c.out / "simulate.txt", rep.str());
    std::cout << rep.str();
    return ok ? kExitOk : kExitFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Observer-based output-feedback synthesis and certification for 1-D reaction-diffusion PDEs"};
    app.require_subcommand(1);
    Options o;
    app.add_option("--config", o.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    app.add_option("--out", o.out, "output directory (default: output_dir from the config)");
    app.add_option("--seed", o.seed, "seed for randomized solver restarts");
    app.add_option("--jobs", o.jobs, "worker threads for sweeps")->check(CLI::PositiveNumber);
    app.fallthrough();

    auto* eigs = app.add_subcommand("eigs", "eigenvalues and boundary traces");
    auto* gains = app.add_subcommand("gains", "feedback and observer gains with placed-pole check");
    auto* cert = app.add_subcommand("certify", "certificate for the configured k_f");
    cert->add_option("--kf", o.kf, "sector bound overriding lmi.kf");
    auto* maxkf = app.add_subcommand("max-kf", "largest certifiable k_f");
    auto* tab = app.add_subcommand("table1", "k_f* over N and both actuation cases");
    auto* sim = app.add_subcommand("simulate", "closed-loop simulation with decay and Lyapunov checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        const Context c = make_context(o);
        if (eigs->parsed()) return cmd_eigs(c);
        if (gains->parsed()) return cmd_gains(c);
        if (cert->parsed()) return cmd_certify(c, o.kf);
        if (maxkf->parsed()) return cmd_max_kf(c);
        if (tab->parsed()) return cmd_table1(c);
        if (sim->parsed()) return cmd_simulate(c);
    } catch (const Error& e) {
        const bool config = is_configuration_problem(e);
        std::cerr << (config ? "configuration error: " : "error: ") << e.what() << "\n";
        return config ? kExitConfig : kExitFailed;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailed;
    }
    return kExitFailed;
}
