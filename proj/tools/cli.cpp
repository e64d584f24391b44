#include "cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "fraglab/analysis.hpp"
#include "fraglab/config.hpp"
#include "fraglab/eigenproblem.hpp"
#include "fraglab/errors.hpp"
#include "fraglab/io.hpp"
#include "fraglab/pde.hpp"
#include "fraglab/reduced.hpp"

namespace fraglab::cli {

namespace {

namespace fs = std::filesystem;

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

std::string path_in(const Options& opt, const std::string& name) {
    return (fs::path(opt.out_dir) / name).string();
}

void emit_manifest(const Options& opt, const std::string& cmd, const Config& cfg,
                   double wall_seconds) {
    std::map<std::string, std::string> echo(cfg.entries().begin(), cfg.entries().end());
    echo["cli.command"] = cmd;
    echo["cli.seed"] = std::to_string(opt.seed);
    write_manifest(path_in(opt, cmd + "_manifest.txt"), echo, wall_seconds);
}

void say(const Options& opt, const std::string& msg) {
    if (!opt.quiet) std::cout << msg << '\n';
}

// ---- config pieces -------------------------------------------------------

void add_model_keys(Schema& s) {
    s.require("model.tau").require("model.nu").require("model.beta").require("model.gamma")
        .require("model.mu");
}

void add_kernel_keys(Schema& s) {
    s.require("kernel.kind", SchemaKey::Type::String).optional("kernel.table", SchemaKey::Type::String);
}

void add_grid_keys(Schema& s) {
    s.require("grid.n", SchemaKey::Type::Int)
        .optional("grid.x_max")
        .optional("grid.kind", SchemaKey::Type::String)
        .optional("grid.x_first");
}

void add_nonlinearity_keys(Schema& s, const std::string& prefix) {
    s.optional(prefix + ".family", SchemaKey::Type::String)
        .optional(prefix + ".a")
        .optional(prefix + ".b")
        .optional(prefix + ".s")
        .optional(prefix + ".c");
}

void add_control_keys(Schema& s) {
    s.optional("control.period")
        .optional("control.v_mean")
        .optional("control.v_cos1")
        .optional("control.v_sin1")
        .optional("control.v_cos2")
        .optional("control.v_sin2")
        .optional("control.r_mean")
        .optional("control.r_cos1")
        .optional("control.r_sin1");
}

PowerLaw parse_model(const Config& cfg) {
    return PowerLaw::derive(cfg.get_double("model.tau"), cfg.get_double("model.nu"),
                            cfg.get_double("model.beta"), cfg.get_double("model.gamma"),
                            cfg.get_double("model.mu"));
}

Kernel parse_kernel(const Config& cfg) {
    const std::string kind = cfg.get_string("kernel.kind");
    if (kind == "constant-two") return Kernel::constant_two();
    if (kind == "tabulated") {
        if (!cfg.has("kernel.table"))
            throw ConfigError("kernel.kind=tabulated needs kernel.table (comma-separated values)");
        std::vector<double> vals;
        std::istringstream in(cfg.get_string("kernel.table"));
        std::string tok;
        while (std::getline(in, tok, ',')) vals.push_back(std::stod(tok));
        return Kernel::tabulated(std::move(vals));
    }
    throw ConfigError("kernel.kind must be constant-two or tabulated, got '" + kind + "'");
}

Grid parse_grid(const Config& cfg, const Options& opt, const PowerLaw& pl, const Kernel& kernel) {
    int n = cfg.get_int("grid.n");
    if (opt.grid_n_override > 0) n = opt.grid_n_override;
    const double x_max = cfg.get_double("grid.x_max", Grid::default_x_max(pl, kernel));
    const std::string kind = cfg.get_string("grid.kind", "uniform");
    if (kind == "uniform") return Grid::uniform(n, x_max);
    if (kind == "geometric") {
        const double x_first = cfg.get_double("grid.x_first", x_max * 1e-8);
        return Grid::geometric(n, x_first, x_max);
    }
    throw ConfigError("grid.kind must be uniform or geometric, got '" + kind + "'");
}

Nonlinearity parse_nonlinearity(const Config& cfg, const std::string& prefix) {
    const std::string fam = cfg.get_string(prefix + ".family");
    if (fam == "exp-decay") return Nonlinearity::exp_decay(cfg.get_double(prefix + ".a", 1.0));
    if (fam == "shifted-gauss-quartic") return Nonlinearity::shifted_gauss_quartic();
    if (fam == "linear") return Nonlinearity::linear(cfg.get_double(prefix + ".c", 1.0));
    if (fam == "prion-sigmoid")
        return Nonlinearity::prion_sigmoid(cfg.get_double(prefix + ".a", 1.0),
                                           cfg.get_double(prefix + ".b", 1.0),
                                           cfg.get_double(prefix + ".s", 1.0));
    throw ConfigError(prefix + ".family must be exp-decay, shifted-gauss-quartic, linear or "
                      "prion-sigmoid; got '" + fam + "'");
}

PeriodicControl parse_control(const Config& cfg) {
    const double T = cfg.get_double("control.period", 1.0);
    std::vector<PeriodicFn::Harmonic> vh, rh;
    vh.push_back({cfg.get_double("control.v_cos1", 0.0), cfg.get_double("control.v_sin1", 0.0)});
    vh.push_back({cfg.get_double("control.v_cos2", 0.0), cfg.get_double("control.v_sin2", 0.0)});
    rh.push_back({cfg.get_double("control.r_cos1", 0.0), cfg.get_double("control.r_sin1", 0.0)});
    return PeriodicControl(
        PeriodicFn::fourier(T, cfg.get_double("control.v_mean", 1.0), std::move(vh)),
        PeriodicFn::fourier(T, cfg.get_double("control.r_mean", 0.0), std::move(rh)));
}

SystemId parse_system(const std::string& name) {
    for (auto id : {SystemId::WOde, SystemId::WZ, SystemId::WZPerturbed, SystemId::WQDrift,
                    SystemId::WQ, SystemId::WQPerturbed, SystemId::VWQ, SystemId::UP})
        if (system_name(id) == name) return id;
    throw ConfigError("unknown ode.system '" + name + "'");
}

/// Scaling constant M_p[U]: explicit key wins; closed form when available.
double reference_moment(const Config& cfg, const std::string& key, const PowerLaw& pl,
                        const Kernel& kernel, double alpha) {
    if (cfg.has(key)) return cfg.get_double(key);
    if (pl.nu == 1.0 && kernel.kind() == Kernel::Kind::ConstantTwo)
        return closed_form_moment(pl, alpha);
    throw ConfigError("cannot derive " + key +
                      " in closed form (needs nu=1 and kappa=2); set it explicitly");
}

void write_kv(const std::string& path, const std::vector<std::pair<std::string, std::string>>& kv) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open " + path);
    for (const auto& [k, v] : kv) out << k << " = " << v << '\n';
}

std::string fmt(double v) { return format_double(v); }

void write_assumption_report(const std::string& path, const AssumptionReport& rep) {
    std::vector<std::pair<std::string, std::string>> kv;
    kv.emplace_back("pass", rep.pass ? "true" : "false");
    kv.emplace_back("detail", rep.detail);
    kv.emplace_back("limsup_proxy", fmt(rep.limsup_proxy));
    for (size_t i = 0; i < rep.roots.size(); ++i)
        kv.emplace_back("root." + std::to_string(i), fmt(rep.roots[i]));
    write_kv(path, kv);
}

// ---- subcommands ---------------------------------------------------------

int cmd_eigen(const Config& cfg, const Options& opt) {
    Timer timer;
    Schema schema;
    add_model_keys(schema);
    add_kernel_keys(schema);
    add_grid_keys(schema);
    schema.optional("eigen.tol").optional("eigen.order", SchemaKey::Type::Int)
        .optional("eigen.adjoint", SchemaKey::Type::Bool);
    schema.validate(cfg);

    const auto pl = parse_model(cfg);
    const auto kernel = parse_kernel(cfg);
    const auto grid = parse_grid(cfg, opt, pl, kernel);
    PerronOptions popt;
    popt.tol = cfg.get_double("eigen.tol", 1e-8);
    popt.order = cfg.get_int("eigen.order", 1) == 2 ? TransportOrder::SecondVanLeer
                                                    : TransportOrder::First;
    popt.with_adjoint = cfg.get_bool("eigen.adjoint", true);
    const auto ep = solve_perron(pl, kernel, grid, popt);

    CsvWriter csv({"x", "U", "phi"});
    const auto x = grid.centers();
    for (size_t i = 0; i < ep.U.size(); ++i) {
        const double row[] = {x[i], ep.U[i], popt.with_adjoint ? ep.phi[i] : 0.0};
        csv.add_row(row);
    }
    csv.write(path_in(opt, "eigenpair.csv"));
    write_kv(path_in(opt, "eigen_report.txt"),
             {{"lambda", fmt(ep.lambda)},
              {"lambda_adjoint", fmt(ep.lambda_adjoint)},
              {"residual", fmt(ep.residual)},
              {"residual_phi", fmt(ep.residual_phi)},
              {"M1", fmt(ep.moment(1.0))}});
    emit_manifest(opt, "eigen", cfg, timer.seconds());
    say(opt, "lambda = " + fmt(ep.lambda));
    return 0;
}

Scenario scenario_from_config(const Config& cfg, const PowerLaw& pl, const Kernel& kernel) {
    const std::string kind = cfg.get_string("scenario.kind");
    if (kind == "linear") return Scenario::linear(pl, kernel, parse_control(cfg));
    if (kind == "nonlinear-drift")
        return Scenario::nonlinear_drift(pl, kernel, parse_nonlinearity(cfg, "f"),
                                         cfg.get_double("scenario.p"));
    if (kind == "nonlinear-drift-death") {
        const double p = cfg.get_double("scenario.p");
        const double q = cfg.get_double("scenario.q");
        return Scenario::nonlinear_drift_death(
            pl, kernel, parse_nonlinearity(cfg, "f"), parse_nonlinearity(cfg, "g"), p, q,
            reference_moment(cfg, "scenario.Mp", pl, kernel, p),
            reference_moment(cfg, "scenario.Mq", pl, kernel, q));
    }
    if (kind == "prion") {
        const double p = cfg.get_double("scenario.p");
        return Scenario::prion(pl, kernel, parse_nonlinearity(cfg, "f"), p,
                               cfg.get_double("prion.lambda"), cfg.get_double("prion.delta"),
                               cfg.get_double("prion.v0", 1.0),
                               reference_moment(cfg, "scenario.Mp", pl, kernel, p),
                               reference_moment(cfg, "scenario.M1", pl, kernel, 1.0));
    }
    throw ConfigError("scenario.kind must be linear, nonlinear-drift, nonlinear-drift-death or "
                      "prion; got '" + kind + "'");
}

int check_scenario_assumptions(const Scenario& sc, const Config& cfg, const Options& opt,
                               const std::string& cmd) {
    AssumptionReport rep;
    rep.pass = true;
    const double X = cfg.get_double("assumptions.X", 50.0);
    switch (sc.kind) {
        case ClosureKind::NonlinearDrift:
            rep = check_assumption_f(*sc.f, sc.pl.mu, X);
            break;
        case ClosureKind::NonlinearDriftDeath:
            rep = check_assumption_fg(*sc.f, *sc.g, sc.pl.k, sc.p, sc.q, X);
            break;
        case ClosureKind::Prion:
            rep = check_assumption_fg_prion(*sc.f, sc.prion_lambda, sc.prion_delta, sc.pl.mu,
                                            sc.pl.k);
            break;
        case ClosureKind::LinearControls:
            return 0;
    }
    write_assumption_report(path_in(opt, cmd + "_assumptions.txt"), rep);
    if (!rep.pass) {
        std::cerr << "assumption check failed: " << rep.detail << '\n';
        return 2;
    }
    return 0;
}

int cmd_simulate_pde(const Config& cfg, const Options& opt) {
    Timer timer;
    Schema schema;
    add_model_keys(schema);
    add_kernel_keys(schema);
    add_grid_keys(schema);
    add_nonlinearity_keys(schema, "f");
    add_nonlinearity_keys(schema, "g");
    add_control_keys(schema);
    schema.require("scenario.kind", SchemaKey::Type::String)
        .optional("scenario.p")
        .optional("scenario.q")
        .optional("scenario.Mp")
        .optional("scenario.Mq")
        .optional("scenario.M1")
        .optional("prion.lambda")
        .optional("prion.delta")
        .optional("prion.v0")
        .require("run.t_end")
        .optional("run.dt")
        .optional("run.sample_dt")
        .optional("run.order", SchemaKey::Type::Int)
        .optional("run.snapshots", SchemaKey::Type::String)
        .optional("ic.kind", SchemaKey::Type::String)
        .optional("ic.center")
        .optional("ic.sigma")
        .optional("ic.mass")
        .optional("ic.a")
        .optional("ic.b")
        .optional("ic.dilation")
        .optional("ic.amplitude")
        .optional("diag.manifold", SchemaKey::Type::Bool)
        .optional("diag.gre", SchemaKey::Type::Bool)
        .optional("diag.dist", SchemaKey::Type::Bool)
        .optional("eigen.tol")
        .optional("assumptions.X");
    schema.validate(cfg);

    const auto pl = parse_model(cfg);
    const auto kernel = parse_kernel(cfg);
    const auto grid = parse_grid(cfg, opt, pl, kernel);
    Scenario sc = scenario_from_config(cfg, pl, kernel);
    if (cfg.get_int("run.order", 1) == 2) sc.order = TransportOrder::SecondVanLeer;
    if (const int rc = check_scenario_assumptions(sc, cfg, opt, "simulate-pde"); rc != 0) return rc;

    RunOptions ro;
    ro.t_end = cfg.get_double("run.t_end");
    ro.dt = opt.dt_override > 0.0 ? opt.dt_override : cfg.get_double("run.dt", 0.0);
    ro.sample_dt = cfg.get_double("run.sample_dt", std::max(ro.t_end / 200.0, 1e-3));
    if (cfg.has("run.snapshots")) {
        std::istringstream in(cfg.get_string("run.snapshots"));
        std::string tok;
        while (std::getline(in, tok, ',')) ro.snapshot_times.push_back(std::stod(tok));
    }
    ro.manifold_diag = cfg.get_bool("diag.manifold", false);
    ro.gre_diag = cfg.get_bool("diag.gre", false);
    ro.compute_dist = cfg.get_bool("diag.dist", false);

    EigenPair ep;
    if (ro.manifold_diag || ro.gre_diag) {
        PerronOptions popt;
        popt.tol = cfg.get_double("eigen.tol", 1e-10);
        ep = solve_perron(pl, kernel, grid, popt);
        ro.eigenpair = &ep;
    }

    std::vector<double> u0;
    const std::string ic = cfg.get_string("ic.kind", "lognormal");
    if (ic == "lognormal") {
        u0 = ic_lognormal(grid, cfg.get_double("ic.center", 2.0), cfg.get_double("ic.sigma", 0.5),
                          cfg.get_double("ic.mass", 1.0));
    } else if (ic == "block") {
        u0 = ic_uniform_block(grid, cfg.get_double("ic.a", 1.0), cfg.get_double("ic.b", 2.0),
                              cfg.get_double("ic.mass", 1.0));
    } else if (ic == "eigen-dilation") {
        if (!ro.eigenpair) {
            PerronOptions popt;
            popt.tol = cfg.get_double("eigen.tol", 1e-10);
            ep = solve_perron(pl, kernel, grid, popt);
        }
        u0 = ic_eigen_dilation(ep, cfg.get_double("ic.dilation", 1.0),
                               cfg.get_double("ic.amplitude", 1.0));
    } else {
        throw ConfigError("ic.kind must be lognormal, block or eigen-dilation");
    }

    std::vector<SizeState> snaps;
    const auto diag = run(sc, grid, std::move(u0), ro, &snaps);

    CsvWriter csv({"t", "M0", "M1", "Mp", "Mq", "norm_H", "eps_p", "dist_E", "rho", "gre"});
    for (size_t i = 0; i < diag.rows(); ++i) {
        const double row[] = {diag.t[i],    diag.M1.size() ? diag.M0[i] : 0.0,
                              diag.M1[i],   diag.Mp[i],
                              diag.Mq[i],   diag.norm_H[i],
                              diag.eps_p[i], diag.dist_E[i],
                              diag.rho[i],  diag.gre[i]};
        csv.add_row(row);
    }
    csv.write(path_in(opt, "diagnostics.csv"));
    const auto x = grid.centers();
    for (const auto& s : snaps) {
        CsvWriter sc_csv({"x", "u"});
        for (size_t i = 0; i < s.u.size(); ++i) {
            const double row[] = {x[i], s.u[i]};
            sc_csv.add_row(row);
        }
        char name[64];
        std::snprintf(name, sizeof name, "snapshot_t%.6g.csv", s.t);
        sc_csv.write(path_in(opt, name));
    }
    emit_manifest(opt, "simulate-pde", cfg, timer.seconds());
    say(opt, "simulate-pde: " + std::to_string(diag.rows()) + " samples written");
    return 0;
}

ReducedParams reduced_params_from_config(const Config& cfg, const PowerLaw& pl,
                                         const Kernel& kernel, SystemId id) {
    ReducedParams prm;
    prm.pl = pl;
    prm.p = cfg.get_double("ode.p", 0.0);
    prm.q = cfg.get_double("ode.q", 0.0);
    if (cfg.has("f.family")) prm.f = parse_nonlinearity(cfg, "f");
    if (cfg.has("g.family")) prm.g = parse_nonlinearity(cfg, "g");
    prm.prion_lambda = cfg.get_double("prion.lambda", 0.0);
    prm.prion_delta = cfg.get_double("prion.delta", 0.0);
    if (id == SystemId::WZ || id == SystemId::WZPerturbed || id == SystemId::WQDrift)
        prm.Mp = reference_moment(cfg, "ode.Mp", pl, kernel, prm.p);
    if (pl.nu == 1.0) {
        prm.lambda10 = pl.tau;
    } else if (pl.nu == 0.0 && pl.gamma == 1.0) {
        prm.lambda10 = std::sqrt(pl.tau * pl.beta);
    } else {
        prm.lambda10 = cfg.get_double("ode.lambda10", 0.0);
    }
    return prm;
}

void add_ode_keys(Schema& schema) {
    schema.require("ode.system", SchemaKey::Type::String)
        .require("ode.y0", SchemaKey::Type::String)
        .require("ode.t_end")
        .optional("ode.dt")
        .optional("ode.stride", SchemaKey::Type::Int)
        .optional("ode.p")
        .optional("ode.q")
        .optional("ode.Mp")
        .optional("ode.lambda10")
        .optional("prion.lambda")
        .optional("prion.delta");
}

int cmd_simulate_ode(const Config& cfg, const Options& opt) {
    Timer timer;
    Schema schema;
    add_model_keys(schema);
    add_kernel_keys(schema);
    add_nonlinearity_keys(schema, "f");
    add_nonlinearity_keys(schema, "g");
    add_control_keys(schema);
    add_ode_keys(schema);
    schema.validate(cfg);

    const auto pl = parse_model(cfg);
    const auto kernel = parse_kernel(cfg);
    const auto id = parse_system(cfg.get_string("ode.system"));
    const auto prm = reduced_params_from_config(cfg, pl, kernel, id);

    std::vector<double> y0;
    {
        std::istringstream in(cfg.get_string("ode.y0"));
        std::string tok;
        while (std::getline(in, tok, ',')) y0.push_back(std::stod(tok));
    }
    IntegrateOptions io;
    io.t_end = cfg.get_double("ode.t_end");
    io.dt = opt.dt_override > 0.0 ? opt.dt_override : cfg.get_double("ode.dt", 1e-3);
    io.stride = cfg.get_int("ode.stride", 10);

    std::optional<PeriodicControl> ctl;
    if (id == SystemId::WOde || id == SystemId::UP) ctl = parse_control(cfg);
    const auto traj = integrate(id, y0, prm, io, ctl ? &*ctl : nullptr);

    std::vector<std::string> cols{"t"};
    for (const auto& c : component_names(id)) cols.push_back(c);
    CsvWriter csv(cols);
    for (size_t i = 0; i < traj.t.size(); ++i) {
        std::vector<double> row{traj.t[i]};
        for (int c = 0; c < traj.dim; ++c) row.push_back(traj.y[i][static_cast<size_t>(c)]);
        csv.add_row(row);
    }
    csv.write(path_in(opt, "trajectory.csv"));
    emit_manifest(opt, "simulate-ode", cfg, timer.seconds());
    say(opt, "simulate-ode(" + system_name(id) + "): " + std::to_string(traj.t.size()) + " samples");
    return 0;
}

int cmd_steady_states(const Config& cfg, const Options& opt) {
    Timer timer;
    Schema schema;
    add_model_keys(schema);
    add_kernel_keys(schema);
    add_nonlinearity_keys(schema, "f");
    add_nonlinearity_keys(schema, "g");
    schema.require("ode.system", SchemaKey::Type::String)
        .optional("ode.p")
        .optional("ode.q")
        .optional("ode.Mp")
        .optional("ode.lambda10")
        .optional("prion.lambda")
        .optional("prion.delta")
        .optional("search.hi")
        .optional("assumptions.X");
    schema.validate(cfg);

    const auto pl = parse_model(cfg);
    const auto kernel = parse_kernel(cfg);
    const auto id = parse_system(cfg.get_string("ode.system"));
    const auto prm = reduced_params_from_config(cfg, pl, kernel, id);

    // assumption checks mirror the closure behind the reduced system
    AssumptionReport arep;
    arep.pass = true;
    const double X = cfg.get_double("assumptions.X", 50.0);
    if (id == SystemId::WZ || id == SystemId::WZPerturbed || id == SystemId::WQDrift)
        arep = check_assumption_f(*prm.f, pl.mu, X);
    else if (id == SystemId::WQ || id == SystemId::WQPerturbed)
        arep = check_assumption_fg(*prm.f, *prm.g, pl.k, prm.p, prm.q, X);
    else if (id == SystemId::VWQ)
        arep = check_assumption_fg_prion(*prm.f, prm.prion_lambda, prm.prion_delta, pl.mu, pl.k);
    write_assumption_report(path_in(opt, "steady-states_assumptions.txt"), arep);
    if (!arep.pass) {
        std::cerr << "assumption check failed: " << arep.detail << '\n';
        return 2;
    }

    const auto rep = steady_states(id, prm, cfg.get_double("search.hi", 50.0));
    std::vector<std::pair<std::string, std::string>> kv;
    kv.emplace_back("system", system_name(id));
    kv.emplace_back("unique", rep.unique ? "true" : "false");
    kv.emplace_back("count", std::to_string(rep.equilibria.size()));
    kv.emplace_back("note", rep.note);
    const auto names = component_names(id);
    for (size_t e = 0; e < rep.equilibria.size(); ++e) {
        for (size_t c = 0; c < names.size(); ++c)
            kv.emplace_back("eq." + std::to_string(e) + "." + names[c],
                            fmt(rep.equilibria[e].y[c]));
        kv.emplace_back("eq." + std::to_string(e) + ".residual", fmt(rep.equilibria[e].residual));
        // classification at each equilibrium
        const auto st = local_stability(
            id, {rep.equilibria[e].y.data(), static_cast<size_t>(rep.equilibria[e].dim)}, prm);
        kv.emplace_back("eq." + std::to_string(e) + ".class", to_string(st.cls));
        kv.emplace_back("eq." + std::to_string(e) + ".trace", fmt(st.trace));
        kv.emplace_back("eq." + std::to_string(e) + ".det", fmt(st.det));
    }
    write_kv(path_in(opt, "steady_states.txt"), kv);
    emit_manifest(opt, "steady-states", cfg, timer.seconds());
    say(opt, "steady-states: " + std::to_string(rep.equilibria.size()) + " equilibria");
    return 0;
}

int cmd_hopf_scan(const Config& cfg, const Options& opt) {
    Timer timer;
    Schema schema;
    add_model_keys(schema);
    add_kernel_keys(schema);
    add_nonlinearity_keys(schema, "f");
    schema.require("prion.lambda").require("prion.delta").optional("hopf.samples", SchemaKey::Type::Int)
        .optional("hopf.p_tol");
    schema.validate(cfg);

    const auto pl = parse_model(cfg);
    ReducedParams prm;
    prm.pl = pl;
    prm.f = parse_nonlinearity(cfg, "f");
    prm.prion_lambda = cfg.get_double("prion.lambda");
    prm.prion_delta = cfg.get_double("prion.delta");
    prm.lambda10 = pl.nu == 1.0 ? pl.tau : 0.0;

    const auto arep = check_assumption_fg_prion(*prm.f, prm.prion_lambda, prm.prion_delta, pl.mu,
                                                pl.k);
    write_assumption_report(path_in(opt, "hopf-scan_assumptions.txt"), arep);
    if (!arep.pass) {
        std::cerr << "assumption check failed: " << arep.detail << '\n';
        return 2;
    }

    const auto rep = hopf_scan(prm, cfg.get_int("hopf.samples", 64),
                               cfg.get_double("hopf.p_tol", 1e-6));
    if (!rep.p0_found) {
        std::cerr << "hopf-scan: " << rep.note << '\n';
        return 3;
    }
    CsvWriter csv({"p", "psi"});
    for (const auto& [p, psi] : rep.psi_samples) {
        const double row[] = {p, psi};
        csv.add_row(row);
    }
    csv.write(path_in(opt, "hopf_psi.csv"));
    write_kv(path_in(opt, "hopf.txt"),
             {{"p0", fmt(rep.p0)},
              {"p1", fmt(rep.p1)},
              {"psi0", fmt(rep.psi0)},
              {"psi_at_p1", fmt(rep.psi_at_p1)},
              {"psi_second_derivative", fmt(rep.psi_second)},
              {"transversality_a_prime", fmt(rep.a_prime)},
              {"b_at_p0", fmt(rep.b_at_p0)},
              {"c_at_p0", fmt(rep.c_at_p0)},
              {"paper_small_mu_condition", rep.paper_small_mu_condition ? "true" : "false"},
              {"V_inf", fmt(rep.eq.y[0])},
              {"W_inf", fmt(rep.eq.y[1])},
              {"Q_inf", fmt(rep.eq.y[2])},
              {"note", rep.note}});
    emit_manifest(opt, "hopf-scan", cfg, timer.seconds());
    say(opt, "hopf-scan: p0 = " + fmt(rep.p0) + ", p1 = " + fmt(rep.p1));
    return 0;
}

int cmd_limit_cycle(const Config& cfg, const Options& opt) {
    Timer timer;
    Schema schema;
    add_model_keys(schema);
    add_kernel_keys(schema);
    add_nonlinearity_keys(schema, "f");
    add_nonlinearity_keys(schema, "g");
    add_control_keys(schema);
    add_ode_keys(schema);
    schema.optional("cycle.burn_in")
        .optional("cycle.section_component", SchemaKey::Type::Int)
        .optional("cycle.section_value")
        .optional("cycle.hysteresis");
    schema.validate(cfg);

    const auto pl = parse_model(cfg);
    const auto kernel = parse_kernel(cfg);
    const auto id = parse_system(cfg.get_string("ode.system"));
    const auto prm = reduced_params_from_config(cfg, pl, kernel, id);

    std::vector<double> y0;
    {
        std::istringstream in(cfg.get_string("ode.y0"));
        std::string tok;
        while (std::getline(in, tok, ',')) y0.push_back(std::stod(tok));
    }
    IntegrateOptions io;
    io.t_end = cfg.get_double("ode.t_end");
    io.dt = opt.dt_override > 0.0 ? opt.dt_override : cfg.get_double("ode.dt", 1e-3);
    io.stride = cfg.get_int("ode.stride", 20);
    const auto traj = integrate(id, y0, prm, io);

    int comp = cfg.get_int("cycle.section_component", 0);
    double section;
    if (cfg.has("cycle.section_value")) {
        section = cfg.get_double("cycle.section_value");
    } else {
        const auto ss = steady_states(id, prm);
        if (ss.equilibria.empty()) throw NumericalError("limit-cycle: no equilibrium for the section");
        section = ss.equilibria.front().y[static_cast<size_t>(comp)];
    }
    const auto rep = detect_limit_cycle(traj, comp, section,
                                        cfg.get_double("cycle.burn_in", io.t_end / 2.0),
                                        cfg.get_double("cycle.hysteresis", 0.01));
    std::vector<std::string> cols{"t"};
    for (const auto& c : component_names(id)) cols.push_back(c);
    CsvWriter csv(cols);
    for (size_t i = 0; i < traj.t.size(); ++i) {
        std::vector<double> row{traj.t[i]};
        for (int c = 0; c < traj.dim; ++c) row.push_back(traj.y[i][static_cast<size_t>(c)]);
        csv.add_row(row);
    }
    csv.write(path_in(opt, "cycle_trajectory.csv"));
    std::vector<std::pair<std::string, std::string>> kv{
        {"detected", rep.detected ? "true" : "false"},
        {"period", fmt(rep.period)},
        {"period_drift", fmt(rep.period_drift)},
        {"amplitude_drift", fmt(rep.amplitude_drift)},
        {"crossings", std::to_string(rep.crossings)},
        {"section_component", std::to_string(comp)},
        {"section_value", fmt(section)},
        {"note", rep.note}};
    for (size_t c = 0; c < rep.amplitude.size(); ++c)
        kv.emplace_back("amplitude." + component_names(id)[c], fmt(rep.amplitude[c]));
    write_kv(path_in(opt, "cycle.txt"), kv);
    emit_manifest(opt, "limit-cycle", cfg, timer.seconds());
    say(opt, std::string("limit-cycle: ") + (rep.detected ? "detected" : "not detected"));
    return 0;
}

int cmd_floquet(const Config& cfg, const Options& opt) {
    Timer timer;
    Schema schema;
    add_model_keys(schema);
    add_kernel_keys(schema);
    add_grid_keys(schema);
    add_control_keys(schema);
    schema.optional("floquet.eigenvector", SchemaKey::Type::Bool).optional("eigen.tol");
    schema.validate(cfg);

    const auto pl = parse_model(cfg);
    const auto ctl = parse_control(cfg);
    EigenPair ep;
    const bool with_uf = cfg.get_bool("floquet.eigenvector", false);
    if (with_uf) {
        const auto kernel = parse_kernel(cfg);
        const auto grid = parse_grid(cfg, opt, pl, kernel);
        PerronOptions popt;
        popt.tol = cfg.get_double("eigen.tol", 1e-9);
        popt.with_adjoint = false;
        ep = solve_perron(pl, kernel, grid, popt);
    }
    const auto rep = floquet_compare(pl, ctl, with_uf ? &ep : nullptr);

    CsvWriter csv({"t", "W", "cum_lambda"});
    for (size_t i = 0; i < rep.orbit_t.size(); i += 8) {
        const double row[] = {rep.orbit_t[i], rep.orbit_W[i], rep.orbit_cumlam[i]};
        csv.add_row(row);
    }
    csv.write(path_in(opt, "floquet_orbit.csv"));
    write_kv(path_in(opt, "floquet.txt"),
             {{"lambda_F", fmt(rep.lambda_F)},
              {"lambda_of_means", fmt(rep.lambda_of_means)},
              {"mean_of_lambda", fmt(rep.mean_of_lambda)},
              {"W_periodic_start", fmt(rep.W_periodic_start)},
              {"shooting_residual", fmt(rep.shooting_residual)},
              {"uf_periodicity_gap", fmt(rep.uf_periodicity_gap)}});
    emit_manifest(opt, "floquet-compare", cfg, timer.seconds());
    say(opt, "floquet: lambda_F = " + fmt(rep.lambda_F));
    return 0;
}

// ---- figure reproductions -------------------------------------------------

int cmd_figure(const Config& cfg, const Options& opt, const std::string& which) {
    Timer timer;
    if (which == "1") {
        // WZ phase planes: focus (p = 0.5) vs node (p = 2)
        const auto pl = PowerLaw::derive(1.0, 1.0, 1.0, 0.1, 1.0);
        SvgPlot svg(720, 480);
        svg.set_title("WZ phase plane, gamma=0.1, f=2exp(-x): p=0.5 focus, p=2 node");
        std::vector<std::pair<std::string, std::string>> kv;
        for (double p : {0.5, 2.0}) {
            ReducedParams prm;
            prm.pl = pl;
            prm.f = Nonlinearity::exp_decay(2.0);
            prm.p = p;
            prm.Mp = closed_form_moment(pl, p);
            prm.lambda10 = 1.0;
            const double Zinf = std::log(2.0) / prm.Mp;
            IntegrateOptions io;
            io.t_end = 150.0;
            io.dt = opt.dt_override > 0.0 ? opt.dt_override : 1e-3;
            io.stride = 50;
            const double y0[] = {1.8, 0.3 * Zinf};
            const auto traj = integrate(SystemId::WZ, y0, prm, io);
            CsvWriter csv({"t", "W", "Z"});
            std::vector<double> Ws, Zs;
            int crossings = 0;
            for (size_t i = 0; i < traj.t.size(); ++i) {
                const double row[] = {traj.t[i], traj.y[i][0], traj.y[i][1]};
                csv.add_row(row);
                Ws.push_back(traj.y[i][0]);
                Zs.push_back(traj.y[i][1] / Zinf);  // normalized for the shared plot
                if (i > 0 && (traj.y[i - 1][0] - 1.0) * (traj.y[i][0] - 1.0) < 0.0) ++crossings;
            }
            const std::string tag = p == 0.5 ? "p05" : "p2";
            csv.write(path_in(opt, "figure1_" + tag + ".csv"));
            svg.add_polyline(Ws, Zs, p == 0.5 ? "#1f77b4" : "#d62728");
            kv.emplace_back("crossings_W1." + tag, std::to_string(crossings));
            kv.emplace_back("final_W." + tag, fmt(traj.y.back()[0]));
            kv.emplace_back("final_Z_over_Zinf." + tag, fmt(traj.y.back()[1] / Zinf));
            kv.emplace_back("fp_at_Zinf_minus_mu." + tag,
                            fmt(prm.f_p(Zinf) - pl.mu));
        }
        svg.write(path_in(opt, "figure1.svg"));
        write_kv(path_in(opt, "figure1_report.txt"), kv);
        emit_manifest(opt, "figure", cfg, timer.seconds());
        say(opt, "figure 1 written");
        return 0;
    }
    if (which == "2") {
        ReducedParams prm;
        prm.pl = PowerLaw::derive(1.0, 1.0, 1.0, 1.0, 0.0);
        prm.f = Nonlinearity::shifted_gauss_quartic();
        prm.g = Nonlinearity::linear(0.9);
        prm.p = 2.0;
        prm.q = 5.0;
        prm.lambda10 = 1.0;
        const auto ss = steady_states(SystemId::WQ, prm);
        if (ss.equilibria.empty()) return 3;
        const double Winf = ss.equilibria[0].y[0], Qinf = ss.equilibria[0].y[1];
        IntegrateOptions io;
        io.t_end = 300.0;
        io.dt = opt.dt_override > 0.0 ? opt.dt_override : 1e-3;
        io.stride = 50;
        const double y0[] = {1.05 * Winf, 0.95 * Qinf};
        const auto traj = integrate(SystemId::WQ, y0, prm, io);
        const auto rep = detect_limit_cycle(traj, 0, Winf, 150.0);
        CsvWriter csv({"t", "W", "Q"});
        std::vector<double> Ws, Qs;
        for (size_t i = 0; i < traj.t.size(); ++i) {
            const double row[] = {traj.t[i], traj.y[i][0], traj.y[i][1]};
            csv.add_row(row);
            if (traj.t[i] > 150.0) {
                Ws.push_back(traj.y[i][0]);
                Qs.push_back(traj.y[i][1]);
            }
        }
        csv.write(path_in(opt, "figure2.csv"));
        SvgPlot svg(720, 480);
        svg.set_title("WQ limit cycle, f=1+exp(-1)-exp(-x^4), g=0.9x, p=2, q=5");
        svg.add_polyline(Ws, Qs);
        svg.write(path_in(opt, "figure2.svg"));
        const auto st = local_stability(SystemId::WQ, {ss.equilibria[0].y.data(), 2}, prm);
        write_kv(path_in(opt, "figure2_report.txt"),
                 {{"detected", rep.detected ? "true" : "false"},
                  {"period", fmt(rep.period)},
                  {"period_drift", fmt(rep.period_drift)},
                  {"W_inf", fmt(Winf)},
                  {"Q_inf", fmt(Qinf)},
                  {"trace", fmt(st.trace)},
                  {"det", fmt(st.det)}});
        emit_manifest(opt, "figure", cfg, timer.seconds());
        say(opt, "figure 2 written (cycle " + std::string(rep.detected ? "detected" : "missing") + ")");
        return rep.detected ? 0 : 3;
    }
    if (which == "3") {
        ReducedParams prm;
        prm.pl = PowerLaw::derive(1.0, 1.0, 1.0, 1.0, 1.0);
        prm.f = Nonlinearity::prion_sigmoid(6.3, 1.1, 20.0);
        prm.p = 4.0;
        prm.prion_lambda = 0.9;
        prm.prion_delta = 0.2;
        prm.lambda10 = 1.0;
        const auto ss = steady_states(SystemId::VWQ, prm);
        if (ss.equilibria.empty()) return 3;
        const auto& eq = ss.equilibria[0].y;
        IntegrateOptions io;
        io.t_end = 400.0;
        io.dt = opt.dt_override > 0.0 ? opt.dt_override : 1e-3;
        io.stride = 50;
        const double y0[] = {1.05 * eq[0], eq[1], 0.9 * eq[2]};
        const auto traj = integrate(SystemId::VWQ, y0, prm, io);
        const auto rep = detect_limit_cycle(traj, 1, prm.pl.mu, 200.0);
        CsvWriter csv({"t", "V", "W", "Q"});
        std::vector<double> Ws, Qs;
        for (size_t i = 0; i < traj.t.size(); ++i) {
            const double row[] = {traj.t[i], traj.y[i][0], traj.y[i][1], traj.y[i][2]};
            csv.add_row(row);
            if (traj.t[i] > 200.0) {
                Ws.push_back(traj.y[i][1]);
                Qs.push_back(traj.y[i][2]);
            }
        }
        csv.write(path_in(opt, "figure3.csv"));
        SvgPlot svg(720, 480);
        svg.set_title("prion limit cycle in the (W,Q) plane, p=4");
        svg.add_polyline(Ws, Qs, "#2ca02c");
        svg.write(path_in(opt, "figure3.svg"));
        write_kv(path_in(opt, "figure3_report.txt"),
                 {{"detected", rep.detected ? "true" : "false"},
                  {"period", fmt(rep.period)},
                  {"period_drift", fmt(rep.period_drift)},
                  {"V_inf", fmt(eq[0])},
                  {"W_inf", fmt(eq[1])},
                  {"Q_inf", fmt(eq[2])}});
        emit_manifest(opt, "figure", cfg, timer.seconds());
        say(opt, "figure 3 written (cycle " + std::string(rep.detected ? "detected" : "missing") + ")");
        return rep.detected ? 0 : 3;
    }
    throw ConfigError("figure takes 1, 2 or 3; got '" + which + "'");
}

}  // namespace

int run_command(const std::string& subcommand, const std::vector<std::string>& args,
                const Options& opt) {
    try {
        fs::create_directories(opt.out_dir);
        Config cfg;
        if (!opt.config_path.empty()) cfg = Config::parse_file(opt.config_path);

        if (subcommand == "figure") {
            if (args.size() != 1) throw ConfigError("usage: figure {1|2|3}");
            return cmd_figure(cfg, opt, args[0]);
        }
        if (!args.empty()) throw ConfigError(subcommand + " takes no positional arguments");
        if (subcommand == "eigen") return cmd_eigen(cfg, opt);
        if (subcommand == "simulate-pde") return cmd_simulate_pde(cfg, opt);
        if (subcommand == "simulate-ode") return cmd_simulate_ode(cfg, opt);
        if (subcommand == "steady-states") return cmd_steady_states(cfg, opt);
        if (subcommand == "hopf-scan") return cmd_hopf_scan(cfg, opt);
        if (subcommand == "limit-cycle") return cmd_limit_cycle(cfg, opt);
        if (subcommand == "floquet-compare") return cmd_floquet(cfg, opt);
        throw ConfigError("unknown subcommand '" + subcommand + "'");
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const ConstraintError& e) {
        std::cerr << "constraint violated: " << e.what() << '\n';
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    }
}

}  // namespace fraglab::cli
