#include <cmath>

#include "doctest.h"
#include "fraglab/analysis.hpp"
#include "fraglab/pde.hpp"
#include "fraglab/reduced.hpp"
#include "test_support.hpp"

using namespace fraglab;

namespace {

const EigenPair& linear_eigenpair() {
    static EigenPair ep = [] {
        const auto pl = PowerLaw::derive(1.0, 1.0, 1.0, 1.0, 0.0);
        const auto kernel = Kernel::constant_two();
        const auto grid = Grid::uniform(400, Grid::default_x_max(pl, kernel));
        PerronOptions opt;
        opt.tol = 1e-11;
        return solve_perron(pl, kernel, grid, opt);
    }();
    return ep;
}

}  // namespace

TEST_CASE("eigenprofile is stationary under linear stepping") {
    const auto& ep = linear_eigenpair();
    const auto pl = PowerLaw::derive(1.0, 1.0, 1.0, 1.0, 0.0);
    PeriodicControl ctl(PeriodicFn::constant(1.0), PeriodicFn::constant(0.0));
    Scenario sc = Scenario::linear(pl, Kernel::constant_two(), ctl);
    Simulator sim(sc, ep.grid);
    SizeState s;
    s.u = ep.U;
    double m0 = ep.grid.integrate(s.u);
    const double t_end = 1.0;
    while (s.t < t_end - 1e-13) {
        const double dt = std::min(0.5 * sim.admissible_dt(s), t_end - s.t);
        sim.step(s, dt);
    }
    const double m1 = ep.grid.integrate(s.u);
    // growth log-slope equals Lambda
    CHECK(std::log(m1 / m0) / t_end == doctest::Approx(ep.lambda).epsilon(1e-3));
    // normalized profile stays put
    double drift = 0.0;
    const auto w = ep.grid.widths();
    for (size_t i = 0; i < s.u.size(); ++i) drift += std::abs(s.u[i] / m1 - ep.U[i]) * w[i];
    CHECK(drift < 1e-6);
}

TEST_CASE("step validates CFL and positivity") {
    const auto pl = PowerLaw::derive(1.0, 1.0, 1.0, 1.0, 0.0);
    const auto grid = Grid::uniform(200, 20.0);
    PeriodicControl ctl(PeriodicFn::constant(1.0), PeriodicFn::constant(0.0));
    Scenario sc = Scenario::linear(pl, Kernel::constant_two(), ctl);
    Simulator sim(sc, grid);
    SizeState s;
    s.u = ic_lognormal(grid, 2.0, 0.4);
    const double adm = sim.admissible_dt(s);
    CHECK_THROWS_AS(sim.step(s, 2.0 * adm), NumericalError);
    // aggressive but admissible stepping keeps the density nonnegative
    for (int it = 0; it < 200; ++it) sim.step(s, 0.999 * sim.admissible_dt(s));
    double mn = 0.0;
    for (double v : s.u) mn = std::min(mn, v);
    CHECK(mn >= 0.0);
}

TEST_CASE("moment identities hold along a controlled linear run") {
    const auto pl = PowerLaw::derive(1.0, 1.0, 1.0, 1.0, 0.6);
    const auto kernel = Kernel::constant_two();
    const auto grid = Grid::uniform(600, 30.0);
    PeriodicControl ctl(PeriodicFn::fourier(1.0, 1.0, {{0.0, 0.4}}), PeriodicFn::constant(1.0));
    Scenario sc = Scenario::linear(pl, kernel, ctl);
    sc.p = 2.0;
    sc.q = 0.5;
    RunOptions opt;
    opt.t_end = 2.0;
    opt.sample_dt = 0.01;
    const auto diag = run(sc, grid, ic_lognormal(grid, 3.0, 0.4), opt);
    REQUIRE(diag.rows() > 100);
    // centered differences of the sampled moments against the Lemma-2.4 rhs;
    // the residual is O(dt) from the explicit step plus the sampling stencil
    auto check_alpha = [&](double alpha, const std::vector<double>& series) {
        for (size_t i = 4; i + 4 < diag.rows(); i += 5) {
            const double h = diag.t[i + 1] - diag.t[i - 1];
            const double fd = (series[i + 1] - series[i - 1]) / h;
            const double Mnu = alpha == 0.0 ? 0.0 : (alpha == 1.0 ? diag.M1[i] : diag.Mp[i]);
            const double Mg = alpha == 0.0 ? diag.M1[i] : diag.Mp[i];  // gamma = 1
            const double rhs = alpha * pl.tau * ctl.V(diag.t[i]) * Mnu +
                               (kernel.moment(alpha) - 1.0) * pl.beta * Mg -
                               pl.mu * ctl.R(diag.t[i]) * series[i];
            CHECK(std::abs(fd - rhs) < 1e-2 * std::max(1.0, std::abs(series[i])));
        }
    };
    check_alpha(0.0, diag.M0);
    check_alpha(1.0, diag.M1);
}

TEST_CASE("alpha=2 moment identity via direct operator application") {
    const auto pl = PowerLaw::derive(1.0, 1.0, 1.0, 1.0, 0.6);
    const auto kernel = Kernel::constant_two();
    const auto grid = Grid::uniform(800, 35.0);
    DiscreteOperator op(grid, pl, kernel);
    auto u = ic_lognormal(grid, 3.0, 0.4);
    u[0] = 0.0;
    std::vector<double> Au(u.size());
    const double V = 1.2, R = 1.0;
    op.apply(u, Au, V, pl.mu * R);
    const double lhs = grid.moment(Au, 2.0);
    const double rhs = 2.0 * pl.tau * V * grid.moment(u, 2.0) +
                       (kernel.moment(2.0) - 1.0) * pl.beta * grid.moment(u, 2.0 + pl.gamma) -
                       pl.mu * R * grid.moment(u, 2.0);
    // the telescoping remainder of the alpha=2 sum is  tau V dx M1 + O(dx^2)
    const double remainder = pl.tau * V * grid.widths()[0] * grid.moment(u, 1.0);
    CHECK(std::abs(lhs - rhs) < 1.5 * remainder);
    CHECK(std::abs(lhs - rhs) / std::abs(rhs) < 6e-2);
}

TEST_CASE("theorem transform: direct vs dilated simulation") {
    PeriodicControl ctl(PeriodicFn::fourier(1.0, 1.0, {{0.0, 0.5}}), PeriodicFn::constant(0.5));
    const double gap400 = testsupport::theorem_transform_gap(400, 2.0, ctl, 1.0);
    CHECK(gap400 < 5e-2);
    const double gap800 = testsupport::theorem_transform_gap(800, 2.0, ctl, 1.0);
    CHECK(gap800 < 0.7 * gap400);  // decreasing under refinement
}

TEST_CASE("observables") {
    const auto& ep = linear_eigenpair();
    const auto o = observables(ep.grid, ep.U, 2.0, 0.5, 3.0);
    CHECK(o.M0 == doctest::Approx(1.0).epsilon(1e-12));  // normalization
    std::vector<double> zero(ep.U.size(), 0.0);
    CHECK(observables(ep.grid, zero, 2.0, 0.5, 3.0).norm_H == 0.0);
    CHECK_THROWS_AS(observables(ep.grid, ep.U, 2.0, 0.5, 0.5), ConstraintError);

    // M_p of the drift steady state (I_inf/M_p) mu^{-kp} U(mu;.) equals I_inf = ln 2
    // (gamma = 0.1 heavy-tail setting, geometric grid)
    const auto pl = PowerLaw::derive(1.0, 1.0, 1.0, 0.1, 1.0);
    const double p = 0.5;
    const double Mp = closed_form_moment(pl, p);
    const auto grid = Grid::geometric(3000, 1e-9, 3.0e6);
    const auto kernel = Kernel::constant_two();
    auto Ucf = closed_form_U(pl, kernel, grid);
    const double Iinf = std::log(2.0);
    std::vector<double> uinf(Ucf.size());
    for (size_t i = 0; i < uinf.size(); ++i) uinf[i] = Iinf / Mp * Ucf[i];  // mu = 1
    CHECK(grid.moment(uinf, p) == doctest::Approx(Iinf).epsilon(1e-4));
}

TEST_CASE("gre quadrature and monotonicity") {
    const auto& ep = linear_eigenpair();
    auto H = [](double r) { return (r - 1.0) * (r - 1.0); };

    // u = v: H(1) * int phi v
    {
        std::vector<double> u = ep.U, v = ep.U;
        const double g = gre(ep.grid, u, v, ep.phi, [](double) { return 3.0; });
        double pv = 0.0;
        const auto w = ep.grid.widths();
        for (size_t i = 0; i < v.size(); ++i) pv += ep.phi[i] * v[i] * w[i];
        CHECK(g == doctest::Approx(3.0 * pv).epsilon(1e-13));
        CHECK(gre(ep.grid, u, v, ep.phi, H) == doctest::Approx(0.0));
    }

    // v = 0 where u > 0 violates the precondition
    {
        std::vector<double> u(ep.U.size(), 1.0), v(ep.U.size(), 0.0);
        CHECK_THROWS_AS(gre(ep.grid, u, v, ep.phi, H), ConstraintError);
        std::vector<double> both(ep.U.size(), 0.0);
        CHECK(gre(ep.grid, both, both, ep.phi, H) == 0.0);
    }

    // normalized GRE is non-increasing per step along a linear run
    {
        const auto pl = PowerLaw::derive(1.0, 1.0, 1.0, 1.0, 0.0);
        PeriodicControl ctl(PeriodicFn::constant(1.0), PeriodicFn::constant(0.0));
        Scenario sc = Scenario::linear(pl, Kernel::constant_two(), ctl);
        Simulator sim(sc, ep.grid);
        auto u = ic_lognormal(ep.grid, 2.0, 0.5);
        const auto w = ep.grid.widths();
        double rho0 = 0.0;
        for (size_t i = 0; i < u.size(); ++i) rho0 += u[i] * ep.phi[i] * w[i];
        std::vector<double> v = ep.U, Av(v.size());
        SizeState s;
        s.u = u;
        const double dt = 0.5 * sim.admissible_dt(s);
        double prev = 1e300;
        for (int step = 0; step < 600; ++step) {
            sim.step(s, dt);
            sim.op().apply(v, Av);
            for (size_t i = 0; i < v.size(); ++i) v[i] += dt * Av[i];
            const double mv = ep.grid.integrate(v);
            double g = 0.0;
            for (size_t i = 0; i < v.size(); ++i)
                g += ep.phi[i] * v[i] * H(s.u[i] / (rho0 * v[i])) * w[i];
            g *= rho0 / mv;
            CHECK(g <= prev + 1e-10);
            prev = g;
        }
    }

    // H(x) = x makes the (normalized) GRE a conserved pairing
    {
        const auto pl = PowerLaw::derive(1.0, 1.0, 1.0, 1.0, 0.0);
        PeriodicControl ctl(PeriodicFn::constant(1.0), PeriodicFn::constant(0.0));
        Scenario sc = Scenario::linear(pl, Kernel::constant_two(), ctl);
        RunOptions opt;
        opt.t_end = 5.0;
        opt.sample_dt = 0.25;
        opt.eigenpair = &ep;
        opt.gre_diag = true;
        opt.gre_H = [](double r) { return r; };
        const auto diag = run(sc, ep.grid, ic_lognormal(ep.grid, 2.0, 0.5), opt);
        for (size_t i = 0; i < diag.rows(); ++i)
            CHECK(diag.gre[i] == doctest::Approx(diag.gre[0]).epsilon(1e-6));
    }
}

TEST_CASE("manifold diagnostics on and off the eigenmanifold") {
    const auto& ep = linear_eigenpair();
    const auto pl = PowerLaw::derive(1.0, 1.0, 1.0, 1.0, 1.0);

    // on-manifold state: eps = 0 and d = 0 up to interpolation error
    const double W0 = 1.15, Q0 = 0.8;
    auto u = ic_eigen_dilation(ep, pl.mu * W0, Q0);
    const auto md = manifold_diagnostics(ep.grid, u, ep, W0, Q0, pl, 2.0);
    CHECK(std::abs(md.eps_p) < 1e-3);
    CHECK(md.dist_E < 1e-3);
    CHECK(md.rho > 0.0);

    // the line-search distance is bounded by the seeded member of the family
    const auto md_seeded = manifold_diagnostics_dilation(ep.grid, u, ep, pl.mu * W0, Q0, pl.k, 2.0);
    CHECK(md_seeded.dist_E <= md.dist_E + 1e-12);

    // rho <= 0 is rejected
    std::vector<double> zero(u.size(), 0.0);
    CHECK_THROWS_AS(manifold_diagnostics(ep.grid, zero, ep, 1.0, 1.0, pl, 2.0), ConstraintError);
}

TEST_CASE("off-manifold eps decays under the nonlinear drift closure") {
    const auto& ep = linear_eigenpair();
    const auto pl = PowerLaw::derive(1.0, 1.0, 1.0, 1.0, 1.0);
    Scenario sc = Scenario::nonlinear_drift(pl, Kernel::constant_two(),
                                            Nonlinearity::exp_decay(2.0), 2.0);
    RunOptions opt;
    opt.t_end = 12.0;
    opt.sample_dt = 0.5;
    opt.eigenpair = &ep;
    opt.manifold_diag = true;
    const auto diag = run(sc, ep.grid, ic_lognormal(ep.grid, 2.0, 0.5), opt);
    REQUIRE(diag.rows() >= 20);
    // |eps| decays by at least an order of magnitude and the fitted rate is positive
    const double e0 = std::abs(diag.eps_p[1]);
    const double e1 = std::abs(diag.eps_p.back());
    CHECK(e1 < 0.1 * e0);
    std::vector<double> t(diag.t.begin() + 1, diag.t.end());
    std::vector<double> v(diag.eps_p.begin() + 1, diag.eps_p.end());
    CHECK(fit_decay_rate(t, v, 1e-2) > 0.05);
}

TEST_CASE("nonlinear drift run tracks the reduced system in the heavy-tail setting") {
    // gamma = 0.1, k = 10 phase-plane coefficients on a geometric grid
    const auto pl = PowerLaw::derive(1.0, 1.0, 1.0, 0.1, 1.0);
    const double p = 0.5;
    const double MpU = closed_form_moment(pl, p);
    const double M1U = closed_form_moment(pl, 1.0);
    const auto kernel = Kernel::constant_two();
    const auto grid = Grid::geometric(3000, 1e-9, 1.8e7);
    Scenario sc = Scenario::nonlinear_drift(pl, kernel, Nonlinearity::exp_decay(2.0), p);

    const double W0 = 1.2, Zinf = std::log(2.0) / MpU;
    const double Q0 = 0.5 * Zinf / std::pow(W0, pl.k * p);
    const auto Ucf = closed_form_U(pl, kernel, grid);
    std::vector<double> u0(Ucf.size());
    {
        // Q0 * U(mu W0; x) sampled from the closed form (mu = 1)
        const double s = std::pow(W0, -pl.k);
        const double se = pl.beta / (pl.tau * pl.gamma);
        const double C = closed_form_normalization(pl);
        const auto x = grid.centers();
        for (size_t i = 0; i < u0.size(); ++i)
            u0[i] = Q0 * s * C * std::exp(std::max(-se * std::pow(s * x[i], pl.gamma), -700.0));
    }

    // reduced oracle
    ReducedParams prm;
    prm.pl = pl;
    prm.f = Nonlinearity::exp_decay(2.0);
    prm.p = p;
    prm.Mp = MpU;
    prm.lambda10 = 1.0;
    IntegrateOptions iopt;
    iopt.t_end = 10.0;
    iopt.dt = 1e-3;
    iopt.stride = 100;
    const double y0[] = {W0, Q0};
    const auto traj = integrate(SystemId::WQDrift, y0, prm, iopt);

    RunOptions opt;
    opt.t_end = 10.0;
    opt.sample_dt = 0.1;
    const auto diag = run(sc, grid, u0, opt);
    REQUIRE(diag.rows() > 50);

    // reconstruct (W, Z) from the PDE moments: ln M_alpha[u] = ln Q + k alpha ln s + ln M_alpha[U]
    double max_rel_W = 0.0, max_rel_Z = 0.0;
    for (size_t i = 0; i < diag.rows(); ++i) {
        const size_t j = static_cast<size_t>(
            std::lround(diag.t[i] / (iopt.dt * iopt.stride)));
        if (j >= traj.t.size()) break;
        if (std::abs(traj.t[j] - diag.t[i]) > 1e-9) continue;
        const double r1 = std::log(diag.M1[i] / M1U), rp = std::log(diag.Mp[i] / MpU);
        const double ln_s = (rp - r1) / (pl.k * (p - 1.0));
        const double ln_Q = r1 - pl.k * ln_s;
        const double W_rec = std::exp(ln_s) / pl.mu;
        const double Z_rec = std::pow(W_rec, pl.k * p) * std::exp(ln_Q);
        const double W = traj.y[j][0], Z = std::pow(W, pl.k * p) * traj.y[j][1];
        max_rel_W = std::max(max_rel_W, std::abs(W_rec / W - 1.0));
        max_rel_Z = std::max(max_rel_Z, std::abs(Z_rec / Z - 1.0));
    }
    CHECK(max_rel_W < 1e-2);
    CHECK(max_rel_Z < 1e-2);
}

TEST_CASE("snapshots and prion closure smoke test") {
    const auto pl = PowerLaw::derive(1.0, 1.0, 1.0, 1.0, 1.0);
    const auto kernel = Kernel::constant_two();
    const auto grid = Grid::uniform(300, 25.0);
    const double Mp = closed_form_moment(pl, 4.0);
    const double M1 = closed_form_moment(pl, 1.0);
    Scenario sc = Scenario::prion(pl, kernel, Nonlinearity::prion_sigmoid(6.3, 1.1, 20.0), 4.0,
                                  0.9, 0.2, 1.3, Mp, M1);
    RunOptions opt;
    opt.t_end = 1.0;
    opt.sample_dt = 0.1;
    opt.snapshot_times = {0.5, 1.0};
    std::vector<SizeState> snaps;
    const auto diag = run(sc, grid, ic_lognormal(grid, 2.0, 0.5, 0.5), opt, &snaps);
    CHECK(diag.rows() >= 10);
    REQUIRE(snaps.size() == 2);
    CHECK(snaps[0].t == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(snaps[0].aux_V > 0.0);
    for (size_t i = 1; i < diag.rows(); ++i) CHECK(diag.t[i] > diag.t[i - 1]);
}
