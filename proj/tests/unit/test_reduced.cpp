#include <cmath>
#include <random>

#include "doctest.h"
#include "fraglab/analysis.hpp"
#include "fraglab/eigenproblem.hpp"
#include "fraglab/reduced.hpp"

using namespace fraglab;

namespace {

ReducedParams drift_params(double gamma, double p, double Mp) {
    ReducedParams prm;
    prm.pl = PowerLaw::derive(1.0, 1.0, 1.0, gamma, 1.0);
    prm.f = Nonlinearity::exp_decay(2.0);
    prm.p = p;
    prm.Mp = Mp;
    prm.lambda10 = 1.0;  // nu=1: Lambda(1,0) = tau
    return prm;
}

ReducedParams fig2_params() {
    ReducedParams prm;
    prm.pl = PowerLaw::derive(1.0, 1.0, 1.0, 1.0, 0.0);
    prm.f = Nonlinearity::shifted_gauss_quartic();
    prm.g = Nonlinearity::linear(0.9);
    prm.p = 2.0;
    prm.q = 5.0;
    prm.lambda10 = 1.0;
    return prm;
}

ReducedParams fig3_params(double p) {
    ReducedParams prm;
    prm.pl = PowerLaw::derive(1.0, 1.0, 1.0, 1.0, 1.0);
    prm.f = Nonlinearity::prion_sigmoid(6.3, 1.1, 20.0);
    prm.p = p;
    prm.prion_lambda = 0.9;
    prm.prion_delta = 0.2;
    prm.lambda10 = 1.0;
    return prm;
}

}  // namespace

TEST_CASE("rhs vanishes at the drift steady state") {
    // gamma=0.1 is the focus/node phase-plane setting; Z_inf = ln 2 / (mu^{kp} M_p)
    const double Mp = closed_form_moment(PowerLaw::derive(1, 1, 1, 0.1, 1), 0.5);
    auto prm = drift_params(0.1, 0.5, Mp);
    const double Zinf = std::log(2.0) / (std::pow(prm.pl.mu, prm.pl.k * prm.p) * Mp);
    ReducedState s;
    s.id = SystemId::WZ;
    s.y = {1.0, Zinf, 0.0};
    std::array<double, 2> r{};
    reduced_rhs(s, prm, nullptr, r);
    CHECK(std::abs(r[0]) < 1e-12);
    CHECK(std::abs(r[1]) < 1e-12);
}

TEST_CASE("rhs vanishes at the prion steady state") {
    auto prm = fig3_params(4.0);
    const auto ss = steady_states(SystemId::VWQ, prm);
    REQUIRE(ss.unique);
    ReducedState s;
    s.id = SystemId::VWQ;
    s.y = ss.equilibria[0].y;
    std::array<double, 3> r{};
    reduced_rhs(s, prm, nullptr, r);
    for (double v : r) CHECK(std::abs(v) < 1e-9);
    CHECK(ss.equilibria[0].residual < 1e-9);
}

TEST_CASE("constant control fixed point of the dilation ODE") {
    ReducedParams prm;
    prm.pl = PowerLaw::derive(1.0, 1.0, 1.0, 1.0, 0.0);
    prm.lambda10 = 1.0;
    PeriodicControl ctl(PeriodicFn::constant(1.7), PeriodicFn::constant(0.0));
    ReducedState s;
    s.id = SystemId::WOde;
    s.y = {1.7, 0.0, 0.0};
    std::array<double, 1> r{};
    reduced_rhs(s, prm, &ctl, r);
    CHECK(r[0] == doctest::Approx(0.0));
}

TEST_CASE("WZ rhs equals the pushforward of the WQ drift rhs") {
    const double Mp = closed_form_moment(PowerLaw::derive(1, 1, 1, 1, 1), 2.0);
    auto prm = drift_params(1.0, 2.0, Mp);
    const double kp = prm.pl.k * prm.p;
    std::mt19937 gen(5);
    std::uniform_real_distribution<double> U(0.1, 3.0);
    for (int it = 0; it < 1000; ++it) {
        const double W = U(gen), Q = U(gen);
        const double Z = std::pow(W, kp) * Q;
        ReducedState sq;
        sq.id = SystemId::WQDrift;
        sq.y = {W, Q, 0.0};
        std::array<double, 2> rq{};
        reduced_rhs(sq, prm, nullptr, rq);
        // push (dW, dQ) through Z = W^{kp} Q
        const double dZ = kp * std::pow(W, kp - 1.0) * Q * rq[0] + std::pow(W, kp) * rq[1];
        ReducedState sz;
        sz.id = SystemId::WZ;
        sz.y = {W, Z, 0.0};
        std::array<double, 2> rz{};
        reduced_rhs(sz, prm, nullptr, rz);
        CHECK(std::abs(rz[0] - rq[0]) <= 1e-12 * std::max(1.0, std::abs(rq[0])));
        CHECK(std::abs(rz[1] - dZ) <= 1e-12 * std::max(1.0, std::abs(dZ)));
    }
}

TEST_CASE("perturbed systems reduce bitwise to the unperturbed ones") {
    const double Mp = closed_form_moment(PowerLaw::derive(1, 1, 1, 1, 1), 2.0);
    auto prm = drift_params(1.0, 2.0, Mp);
    auto prm2 = fig2_params();
    std::mt19937 gen(6);
    std::uniform_real_distribution<double> U(0.2, 2.5);
    for (int it = 0; it < 200; ++it) {
        const double W = U(gen), Y = U(gen);
        for (auto [ida, idb] : {std::pair{SystemId::WZ, SystemId::WZPerturbed},
                                std::pair{SystemId::WQ, SystemId::WQPerturbed}}) {
            const auto& pp = (ida == SystemId::WZ) ? prm : prm2;
            ReducedState a, b;
            a.id = ida;
            b.id = idb;
            a.y = b.y = {W, Y, 0.0};
            a.t = b.t = 0.37;
            std::array<double, 2> ra{}, rb{};
            reduced_rhs(a, pp, nullptr, ra);
            reduced_rhs(b, pp, nullptr, rb);
            CHECK(ra[0] == rb[0]);  // bitwise
            CHECK(ra[1] == rb[1]);
        }
    }
}

TEST_CASE("RK4 order on the dilation ODE") {
    ReducedParams prm;
    prm.pl = PowerLaw::derive(1.0, 1.0, 1.0, 1.0, 0.0);
    prm.lambda10 = 1.0;
    PeriodicControl ctl(PeriodicFn::fourier(1.0, 1.0, {{0.0, 0.5}}), PeriodicFn::constant(0.0));
    const double y0[] = {0.7};
    auto run_dt = [&](double dt) {
        IntegrateOptions opt;
        opt.t_end = 1.0;
        opt.dt = dt;
        opt.stride = 1 << 20;  // keep only the last point
        return integrate(SystemId::WOde, y0, prm, opt, &ctl).y.back()[0];
    };
    const double ref = run_dt(1.0 / 8192.0);
    const double e1 = std::abs(run_dt(1.0 / 64.0) - ref);
    const double e2 = std::abs(run_dt(1.0 / 128.0) - ref);
    const double e3 = std::abs(run_dt(1.0 / 256.0) - ref);
    const double o1 = std::log2(e1 / e2), o2 = std::log2(e2 / e3);
    CHECK(o1 > 3.7);
    CHECK(o1 < 4.3);
    CHECK(o2 > 3.7);
    CHECK(o2 < 4.3);
}

TEST_CASE("bernoulli closed form") {
    const auto pl = PowerLaw::derive(1.0, 1.0, 1.0, 1.0, 0.0);
    auto one = [](double) { return 1.0; };
    auto zero = [](double) { return 0.0; };

    // V1 = V2 = 1: W stays at the fixed point
    CHECK(bernoulli_W(1.0, one, one, 10.0, pl) == doctest::Approx(1.0).epsilon(1e-9));

    // V2 = 0: dW = -tau W^2 / k integrates to W0/(1 + W0 tau t / k)
    const double t = 3.0, W0 = 2.0;
    CHECK(bernoulli_W(W0, one, zero, t, pl) ==
          doctest::Approx(W0 / (1.0 + W0 * pl.tau * t / pl.k)).epsilon(1e-10));

    // oscillating V2 against an RK4 oracle at t = 10
    auto V2 = [](double s) { return 1.0 + 0.5 * std::sin(2.0 * M_PI * s); };
    ReducedParams prm;
    prm.pl = pl;
    prm.lambda10 = pl.tau;
    PeriodicControl ctl(PeriodicFn::fourier(1.0, 1.0, {{0.0, 0.5}}), PeriodicFn::constant(0.0));
    IntegrateOptions opt;
    opt.t_end = 10.0;
    opt.dt = 1e-4;
    opt.stride = 1 << 20;
    const double y0[] = {1.3};
    const double rk4 = integrate(SystemId::WOde, y0, prm, opt, &ctl).y.back()[0];
    CHECK(std::abs(bernoulli_W(1.3, one, V2, 10.0, pl, 4000) - rk4) < 1e-6);
}

TEST_CASE("positive orthant preserved by the catalog systems") {
    // WZ, three p values
    for (double p : {0.5, 2.0, 5.0}) {
        const double Mp = closed_form_moment(PowerLaw::derive(1, 1, 1, 1, 1), p);
        auto prm = drift_params(1.0, p, Mp);
        IntegrateOptions opt;
        opt.t_end = 100.0;
        opt.dt = 1e-3;
        opt.stride = 100;
        const double y0[] = {1.7, 0.4};
        CHECK_NOTHROW(integrate(SystemId::WZ, y0, prm, opt));
    }
    // WQ at the oscillation coefficients
    {
        auto prm = fig2_params();
        IntegrateOptions opt;
        opt.t_end = 100.0;
        opt.dt = 1e-3;
        opt.stride = 100;
        const double y0[] = {1.2, 0.8};
        CHECK_NOTHROW(integrate(SystemId::WQ, y0, prm, opt));
    }
    // prion triple
    {
        auto prm = fig3_params(4.0);
        IntegrateOptions opt;
        opt.t_end = 100.0;
        opt.dt = 1e-3;
        opt.stride = 100;
        const double y0[] = {1.0, 0.9, 0.5};
        CHECK_NOTHROW(integrate(SystemId::VWQ, y0, prm, opt));
    }
    // starting on the boundary is rejected
    {
        auto prm = fig2_params();
        IntegrateOptions opt;
        const double y0[] = {1.0, 0.0};
        CHECK_THROWS_AS(integrate(SystemId::WQ, y0, prm, opt), ConstraintError);
    }
}

TEST_CASE("reduced moment dynamics") {
    const auto kernel = Kernel::constant_two();
    // nu=1: alpha=1 reduces to (tau V - mu R) script-M1 exactly
    {
        const auto pl = PowerLaw::derive(1.0, 1.0, 1.0, 1.0, 0.7);
        ReducedParams prm;
        prm.pl = pl;
        prm.lambda10 = pl.tau;
        PeriodicControl ctl(PeriodicFn::fourier(1.0, 1.2, {{0.0, 0.3}}), PeriodicFn::constant(0.8));
        IntegrateOptions opt;
        opt.t_end = 2.0;
        opt.dt = 1e-3;
        opt.stride = 5;
        const double y0[] = {0.8};
        const auto traj = integrate(SystemId::WOde, y0, prm, opt, &ctl);
        auto em = [&](double a) { return closed_form_moment(pl, a); };
        const auto ms = moments_reduced(traj, ctl.V, ctl.R, 1.0, pl, pl.tau, em);
        for (size_t i = 0; i < ms.t.size(); ++i) {
            const double W = traj.y[i][0];
            const double predicted = (pl.tau * ctl.V(ms.t[i]) - pl.mu * ctl.R(ms.t[i])) * ms.value[i];
            (void)W;
            CHECK(ms.rhs[i] == doctest::Approx(predicted).epsilon(1e-12));
        }
        // alpha=0: rhs matches centered differences of the closed-form series
        const auto m0 = moments_reduced(traj, ctl.V, ctl.R, 0.0, pl, pl.tau, em);
        for (size_t i = 2; i + 2 < m0.t.size(); i += 7) {
            const double h = m0.t[i + 1] - m0.t[i];
            const double fd = (m0.value[i + 1] - m0.value[i - 1]) / (2.0 * h);
            CHECK(std::abs(fd - m0.rhs[i]) < 1e-4 * std::max(1.0, std::abs(m0.rhs[i])));
        }
    }
    // nu=0, gamma=1: (M0, M1) solves the closed 2x2 system
    {
        const auto pl = PowerLaw::derive(1.0, 0.0, 1.0, 1.0, 0.4);
        const auto grid = Grid::uniform(800, Grid::default_x_max(pl, kernel));
        PerronOptions popt;
        popt.with_adjoint = false;
        popt.tol = 1e-10;
        const auto ep = solve_perron(pl, kernel, grid, popt);
        ReducedParams prm;
        prm.pl = pl;
        prm.lambda10 = ep.lambda;  // sqrt(tau beta) up to discretization
        PeriodicControl ctl(PeriodicFn::fourier(1.0, 1.0, {{0.2, 0.3}}), PeriodicFn::constant(1.0));
        IntegrateOptions opt;
        opt.t_end = 2.0;
        opt.dt = 1e-3;
        opt.stride = 10;
        const double y0[] = {1.2};
        const auto traj = integrate(SystemId::WOde, y0, prm, opt, &ctl);
        auto em = [&](double a) { return ep.moment(a); };
        const auto m0 = moments_reduced(traj, ctl.V, ctl.R, 0.0, pl, ep.lambda, em);
        const auto m1 = moments_reduced(traj, ctl.V, ctl.R, 1.0, pl, ep.lambda, em);
        // dM0 = -mu R M0 + beta M1 ; dM1 = tau V M0 - mu R M1  (the closed pair)
        for (size_t i = 0; i < m0.t.size(); i += 9) {
            const double muR = pl.mu * ctl.R(m0.t[i]);
            CHECK(m0.rhs[i] ==
                  doctest::Approx(-muR * m0.value[i] + pl.beta * m1.value[i]).epsilon(2e-3));
            CHECK(m1.rhs[i] ==
                  doctest::Approx(pl.tau * ctl.V(m1.t[i]) * m0.value[i] - muR * m1.value[i])
                      .epsilon(2e-3));
        }
    }
}

TEST_CASE("integrate rejects bad inputs") {
    auto prm = fig2_params();
    IntegrateOptions opt;
    opt.dt = -1.0;
    const double y0[] = {1.0, 1.0};
    CHECK_THROWS_AS(integrate(SystemId::WQ, y0, prm, opt), ConfigError);
    const double y1[] = {1.0};
    IntegrateOptions opt2;
    CHECK_THROWS_AS(integrate(SystemId::WQ, y1, prm, opt2), ConfigError);
}
