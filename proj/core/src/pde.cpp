#include "fraglab/pde.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fraglab/errors.hpp"
#include "fraglab/numerics.hpp"

namespace fraglab {

Scenario Scenario::linear(PowerLaw pl, Kernel kernel, PeriodicControl control) {
    Scenario s;
    s.kind = ClosureKind::LinearControls;
    s.pl = pl;
    s.kernel = std::move(kernel);
    s.control = std::move(control);
    return s;
}

Scenario Scenario::nonlinear_drift(PowerLaw pl, Kernel kernel, Nonlinearity f, double p) {
    if (!(p >= 0.0)) throw ConstraintError("Scenario: p must be >= 0");
    Scenario s;
    s.kind = ClosureKind::NonlinearDrift;
    s.pl = pl;
    s.kernel = std::move(kernel);
    s.f = std::move(f);
    s.p = p;
    s.r_weight = std::max(3.0, 2.0 * p + 1.0);
    return s;
}

Scenario Scenario::nonlinear_drift_death(PowerLaw pl, Kernel kernel, Nonlinearity f,
                                         Nonlinearity g, double p, double q, double Mp_ref,
                                         double Mq_ref) {
    if (!(p >= 0.0) || !(q >= 0.0)) throw ConstraintError("Scenario: p, q must be >= 0");
    Scenario s;
    s.kind = ClosureKind::NonlinearDriftDeath;
    s.pl = pl;
    s.kernel = std::move(kernel);
    s.f = std::move(f);
    s.g = std::move(g);
    s.p = p;
    s.q = q;
    s.Mp_ref = Mp_ref;
    s.Mq_ref = Mq_ref;
    s.r_weight = std::max(3.0, 2.0 * std::max(p, q) + 1.0);
    return s;
}

Scenario Scenario::prion(PowerLaw pl, Kernel kernel, Nonlinearity f, double p, double lambda,
                         double delta, double V0, double Mp_ref, double M1_ref) {
    if (!(lambda > 0.0) || !(delta > 0.0)) throw ConstraintError("Scenario: lambda, delta must be > 0");
    if (!(V0 >= 0.0)) throw ConstraintError("Scenario: prion V0 must be >= 0");
    Scenario s;
    s.kind = ClosureKind::Prion;
    s.pl = pl;
    s.kernel = std::move(kernel);
    s.f = std::move(f);
    s.p = p;
    s.prion_lambda = lambda;
    s.prion_delta = delta;
    s.prion_V0 = V0;
    s.Mp_ref = Mp_ref;
    s.M1_ref = M1_ref;
    s.r_weight = std::max(3.0, 2.0 * p + 1.0);
    return s;
}

Simulator::Simulator(Scenario scenario, const Grid& grid)
    : scenario_(std::move(scenario)), grid_(&grid), op_(grid, scenario_.pl, scenario_.kernel) {
    switch (scenario_.kind) {
        case ClosureKind::LinearControls:
            if (!scenario_.control) throw ConfigError("linear scenario needs a (V,R) control");
            break;
        case ClosureKind::NonlinearDrift:
            if (!scenario_.f) throw ConfigError("nonlinear-drift scenario needs f");
            break;
        case ClosureKind::NonlinearDriftDeath:
            if (!scenario_.f || !scenario_.g)
                throw ConfigError("nonlinear-drift-death scenario needs f and g");
            break;
        case ClosureKind::Prion:
            if (!scenario_.f) throw ConfigError("prion scenario needs f");
            break;
    }
}

double Simulator::velocity_multiplier(const SizeState& s) const {
    switch (scenario_.kind) {
        case ClosureKind::LinearControls: return scenario_.control->V(s.t);
        case ClosureKind::NonlinearDrift:
            return scenario_.f->value(grid_->moment(s.u, scenario_.p));
        case ClosureKind::NonlinearDriftDeath:
            return scenario_.f->value(grid_->moment(s.u, scenario_.p) / scenario_.Mp_ref);
        case ClosureKind::Prion: {
            const double arg = std::pow(scenario_.pl.mu, -scenario_.pl.k * scenario_.p) *
                               scenario_.M1_ref / scenario_.Mp_ref *
                               grid_->moment(s.u, scenario_.p);
            return s.aux_V * scenario_.f->value(arg);
        }
    }
    return 1.0;
}

double Simulator::death_rate(const SizeState& s) const {
    switch (scenario_.kind) {
        case ClosureKind::LinearControls: return scenario_.pl.mu * scenario_.control->R(s.t);
        case ClosureKind::NonlinearDrift: return scenario_.pl.mu;
        case ClosureKind::NonlinearDriftDeath:
            return scenario_.g->value(grid_->moment(s.u, scenario_.q) / scenario_.Mq_ref);
        case ClosureKind::Prion: return scenario_.pl.mu;
    }
    return 0.0;
}

double Simulator::admissible_dt(const SizeState& s) const {
    return op_.cfl_dt(velocity_multiplier(s), scenario_.order);
}

StepInfo Simulator::step(SizeState& s, double dt) const {
    const double V = velocity_multiplier(s);
    const double muR = death_rate(s);
    const double adm = op_.cfl_dt(V, scenario_.order);
    if (dt > adm * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "step: dt=" << dt << " violates the CFL bound; admissible dt <= " << adm;
        throw NumericalError(os.str());
    }
    const size_t n = s.u.size();
    thread_local std::vector<double> Au;
    Au.resize(n);
    op_.apply(s.u, Au, V, muR, scenario_.order);
    double umax = 0.0;
    for (size_t i = 0; i < n; ++i) {
        s.u[i] += dt * Au[i];
        umax = std::max(umax, s.u[i]);
    }
    const double floor = -1e-14 * umax;
    for (size_t i = 0; i < n; ++i) {
        if (s.u[i] < 0.0) {
            if (s.u[i] >= floor) {
                s.u[i] = 0.0;
            } else {
                std::ostringstream os;
                os << "step: density went negative beyond tolerance at t=" << s.t << " (u["
                   << i << "]=" << s.u[i] << ", floor=" << floor << ")";
                throw NumericalError(os.str());
            }
        }
    }
    if (scenario_.kind == ClosureKind::Prion) {
        // monomer sub-step with the same explicit scheme, clamped at 0
        const double arg = std::pow(scenario_.pl.mu, -scenario_.pl.k * scenario_.p) *
                           scenario_.M1_ref / scenario_.Mp_ref * grid_->moment(s.u, scenario_.p);
        const double m1 = grid_->moment(s.u, 1.0);
        const double dV = -s.aux_V * scenario_.f->value(arg) * m1 - scenario_.prion_delta * s.aux_V +
                          scenario_.prion_lambda;
        s.aux_V = std::max(0.0, s.aux_V + dt * dV);
    }
    s.t += dt;
    StepInfo info;
    info.dt = dt;
    info.mass = grid_->integrate(s.u);
    info.velocity = V;
    info.death = muR;
    return info;
}

Observables observables(const Grid& grid, std::span<const double> u, double p, double q,
                        double r) {
    if (!(r >= 1.0)) throw ConstraintError("observables: r must be >= 1");
    Observables o;
    o.M0 = grid.integrate(u);
    o.M1 = grid.moment(u, 1.0);
    o.Mp = grid.moment(u, p);
    o.Mq = grid.moment(u, q);
    const auto x = grid.centers();
    const auto w = grid.widths();
    double s = 0.0;
    for (size_t i = 0; i < u.size(); ++i)
        s += u[i] * u[i] * (x[i] + std::pow(x[i], r)) * w[i];
    o.norm_H = std::sqrt(s);
    return o;
}

ManifoldDiag manifold_diagnostics(const Grid& grid, std::span<const double> u, const EigenPair& ep,
                                  double W, double Q, const PowerLaw& pl, double p,
                                  bool with_distance) {
    if (pl.nu != 1.0)
        throw ConstraintError("manifold_diagnostics: the distance construction requires nu = 1");
    return manifold_diagnostics_dilation(grid, u, ep, pl.mu * W, Q, pl.k, p, with_distance);
}

ManifoldDiag manifold_diagnostics_dilation(const Grid& grid, std::span<const double> u,
                                           const EigenPair& ep, double s_dilation, double Q,
                                           double k, double p, bool with_distance) {
    ManifoldDiag d;
    const auto w = grid.widths();
    const auto x = grid.centers();
    double rho = 0.0;
    for (size_t i = 0; i < u.size(); ++i) rho += u[i] * ep.phi[i] * w[i];
    if (!(rho > 0.0)) throw ConstraintError("manifold_diagnostics: rho = int u phi <= 0");
    d.rho = rho;
    const double Mp = ep.moment(p);
    d.eps_p = grid.moment(u, p) / (std::pow(s_dilation, k * p) * Mp * Q) - 1.0;

    if (with_distance) {
        // || u/rho - U(s;.) ||_{L1(phi dx)}, minimized over the dilation s
        std::vector<double> xs(x.size() + 1), ys(ep.U.size() + 1);
        xs[0] = 0.0;
        ys[0] = std::max(0.0, ep.U[0] - x[0] * (ep.U[1] - ep.U[0]) / (x[1] - x[0]));
        std::copy(x.begin(), x.end(), xs.begin() + 1);
        std::copy(ep.U.begin(), ep.U.end(), ys.begin() + 1);
        const num::Pchip interp(std::move(xs), std::move(ys));
        // compare against the member of E whose phi-pairing matches rho^{-1} u
        // (the amplitude Q of Q U(s;.) is pinned by <., phi> = 1)
        thread_local std::vector<double> dil;
        dil.resize(u.size());
        auto objective = [&](double s) {
            const double scale = std::pow(s, -k);
            double pair = 0.0;
            for (size_t i = 0; i < u.size(); ++i) {
                dil[i] = std::max(0.0, scale * interp(scale * x[i]));
                pair += dil[i] * ep.phi[i] * w[i];
            }
            if (!(pair > 0.0)) return 1e300;
            double acc = 0.0;
            for (size_t i = 0; i < u.size(); ++i)
                acc += std::abs(u[i] / rho - dil[i] / pair) * ep.phi[i] * w[i];
            return acc;
        };
        const double seed = s_dilation;
        const double s_best = num::golden_min(objective, seed / 4.0, 4.0 * seed, 1e-6 * seed);
        d.dist_E = std::min(objective(s_best), objective(seed));
    }
    return d;
}

Diagnostics run(const Scenario& scenario, const Grid& grid, std::vector<double> u0,
                const RunOptions& opt, std::vector<SizeState>* snapshots) {
    Simulator sim(scenario, grid);
    SizeState s;
    s.t = 0.0;
    s.u = std::move(u0);
    s.aux_V = scenario.prion_V0;
    if (static_cast<int>(s.u.size()) != grid.size())
        throw ConfigError("run: u0 size does not match the grid");

    const PowerLaw& pl = scenario.pl;
    const bool want_manifold = opt.manifold_diag && opt.eigenpair;
    const bool want_gre =
        opt.gre_diag && opt.eigenpair && scenario.kind == ClosureKind::LinearControls;
    if (opt.manifold_diag && !opt.eigenpair)
        throw ConfigError("run: manifold diagnostics need an eigenpair");
    if (opt.gre_diag && scenario.kind != ClosureKind::LinearControls)
        throw ConfigError("run: the GRE diagnostic applies to linear runs");
    if ((want_manifold || want_gre) && opt.eigenpair->grid.size() != grid.size())
        throw ConfigError("run: eigenpair grid does not match the run grid");
    if (want_manifold && pl.nu != 1.0)
        throw ConstraintError("run: manifold diagnostics require nu = 1");

    auto H = opt.gre_H ? opt.gre_H : [](double r) { return (r - 1.0) * (r - 1.0); };

    // companion dilation ODE (W, Q) driven by the run's own feedbacks (nu=1)
    double comp_W = 1.0, comp_Q = 1.0, rho0 = 1.0;
    if (want_manifold || want_gre) {
        rho0 = 0.0;
        const auto w = grid.widths();
        for (size_t i = 0; i < s.u.size(); ++i) rho0 += s.u[i] * opt.eigenpair->phi[i] * w[i];
        comp_Q = rho0;
    }
    // discrete comparison solution for the GRE (evolved by the same scheme)
    std::vector<double> vker;
    if (want_gre) vker = opt.eigenpair->U;

    Diagnostics diag;
    auto sample = [&](const SizeState& st, double velocity, double mass) {
        const auto o = observables(grid, st.u, scenario.p, scenario.q, scenario.r_weight);
        diag.t.push_back(st.t);
        diag.M0.push_back(o.M0);
        diag.M1.push_back(o.M1);
        diag.Mp.push_back(o.Mp);
        diag.Mq.push_back(o.Mq);
        diag.norm_H.push_back(o.norm_H);
        diag.mass.push_back(mass);
        diag.velocity.push_back(velocity);
        if (want_manifold) {
            const auto md = manifold_diagnostics_dilation(grid, st.u, *opt.eigenpair, comp_W,
                                                          comp_Q, pl.k, scenario.p,
                                                          opt.compute_dist);
            diag.eps_p.push_back(md.eps_p);
            diag.dist_E.push_back(opt.compute_dist ? md.dist_E :
                                                     std::numeric_limits<double>::quiet_NaN());
            diag.rho.push_back(md.rho);
        } else {
            const double nan = std::numeric_limits<double>::quiet_NaN();
            diag.eps_p.push_back(nan);
            diag.dist_E.push_back(nan);
            double rho = nan;
            if (opt.eigenpair && opt.eigenpair->grid.size() == grid.size()) {
                rho = 0.0;
                const auto w = grid.widths();
                for (size_t i = 0; i < st.u.size(); ++i)
                    rho += st.u[i] * opt.eigenpair->phi[i] * w[i];
            }
            diag.rho.push_back(rho);
        }
        if (want_gre) {
            const double mv = grid.integrate(vker);
            double g = 0.0;
            const auto w = grid.widths();
            for (size_t i = 0; i < st.u.size(); ++i) {
                if (vker[i] <= 0.0) continue;
                g += opt.eigenpair->phi[i] * vker[i] * H(st.u[i] / (rho0 * vker[i])) * w[i];
            }
            diag.gre.push_back(rho0 * g / mv);
        } else {
            diag.gre.push_back(std::numeric_limits<double>::quiet_NaN());
        }
    };

    sample(s, sim.velocity_multiplier(s), grid.integrate(s.u));
    double next_sample = opt.sample_dt;
    size_t next_snap = 0;
    auto snap_times = opt.snapshot_times;
    std::sort(snap_times.begin(), snap_times.end());
    thread_local std::vector<double> Av;

    while (s.t < opt.t_end - 1e-13) {
        const double V_now = sim.velocity_multiplier(s);
        const double death_now = sim.death_rate(s);
        double dt = opt.dt;
        if (!(dt > 0.0)) {
            const double adm = std::min(sim.op().cfl_dt(V_now, scenario.order),
                                        sim.op().positivity_dt(V_now, death_now, scenario.order));
            dt = opt.cfl_frac / 0.9 * adm;
        }
        dt = std::min(dt, opt.t_end - s.t);
        if (next_sample > s.t) dt = std::min(dt, next_sample - s.t);
        if (next_snap < snap_times.size() && snap_times[next_snap] > s.t)
            dt = std::min(dt, snap_times[next_snap] - s.t);

        const auto info = sim.step(s, dt);
        if (want_manifold || want_gre) {
            // Heun update of the companion dilation/amplitude with lagged feedbacks
            auto sdot = [&](double W) { return pl.tau * W / pl.k * (V_now - W); };
            const double Wm = comp_W + 0.5 * dt * sdot(comp_W);
            comp_Q *= std::exp(dt * (pl.tau * Wm - death_now));
            comp_W += dt * sdot(Wm);
        }
        if (want_gre) {
            Av.resize(vker.size());
            sim.op().apply(vker, Av, V_now, death_now, scenario.order);
            for (size_t i = 0; i < vker.size(); ++i) vker[i] += dt * Av[i];
        }
        if (snapshots && next_snap < snap_times.size() && s.t >= snap_times[next_snap] - 1e-12) {
            snapshots->push_back(s);
            ++next_snap;
        }
        const bool at_end = s.t >= opt.t_end - 1e-13;
        if ((s.t >= next_sample - 1e-12 || at_end) &&
            (diag.t.empty() || s.t > diag.t.back() + 1e-13)) {
            sample(s, info.velocity, info.mass);
            while (next_sample <= s.t + 1e-12) next_sample += opt.sample_dt;
        }
    }
    return diag;
}

double gre(const Grid& grid, std::span<const double> u, std::span<const double> v,
           std::span<const double> phi, const std::function<double(double)>& H) {
    const auto w = grid.widths();
    double s = 0.0;
    for (size_t i = 0; i < u.size(); ++i) {
        if (v[i] <= 0.0) {
            if (u[i] <= 0.0) continue;
            throw ConstraintError("gre: v vanishes where u > 0");
        }
        s += phi[i] * v[i] * H(u[i] / v[i]) * w[i];
    }
    return s;
}

std::vector<double> ic_eigen_dilation(const EigenPair& ep, double dilation, double amplitude) {
    auto u = rescale_eigenvector(ep.U, dilation, 1.0, ep.grid);
    for (auto& v : u) v *= amplitude;
    return u;
}

std::vector<double> ic_lognormal(const Grid& grid, double center, double sigma, double mass) {
    const auto x = grid.centers();
    std::vector<double> u(static_cast<size_t>(grid.size()));
    for (size_t i = 0; i < u.size(); ++i) {
        const double lx = std::log(std::max(x[i], 1e-300));
        u[i] = std::exp(-0.5 * std::pow((lx - std::log(center)) / sigma, 2)) / std::max(x[i], 1e-300);
    }
    const double m = grid.integrate(u);
    for (auto& v : u) v *= mass / m;
    return u;
}

std::vector<double> ic_uniform_block(const Grid& grid, double a, double b, double mass) {
    const auto x = grid.centers();
    std::vector<double> u(static_cast<size_t>(grid.size()), 0.0);
    for (size_t i = 0; i < u.size(); ++i)
        if (x[i] >= a && x[i] <= b) u[i] = 1.0;
    const double m = grid.integrate(u);
    if (!(m > 0.0)) throw ConstraintError("ic_uniform_block: block misses the grid");
    for (auto& v : u) v *= mass / m;
    return u;
}

}  // namespace fraglab
