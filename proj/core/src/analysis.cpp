#include "fraglab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fraglab/errors.hpp"

namespace fraglab {

namespace {

double rhs_residual(SystemId id, std::span<const double> y, const ReducedParams& prm,
                    const PeriodicControl* ctl = nullptr) {
    ReducedState s;
    s.id = id;
    s.t = 0.0;
    const int dim = system_dim(id);
    for (int c = 0; c < dim; ++c) s.y[static_cast<size_t>(c)] = y[static_cast<size_t>(c)];
    std::array<double, 3> r{};
    reduced_rhs(s, prm, ctl, std::span<double>(r.data(), static_cast<size_t>(dim)));
    double sup = 0.0;
    for (int c = 0; c < dim; ++c) sup = std::max(sup, std::abs(r[static_cast<size_t>(c)]));
    return sup;
}

}  // namespace

SteadyStateReport steady_states(SystemId id, const ReducedParams& prm, double search_hi) {
    SteadyStateReport rep;
    rep.id = id;
    const PowerLaw& pl = prm.pl;
    switch (id) {
        case SystemId::WZ:
        case SystemId::WZPerturbed:
        case SystemId::WQDrift: {
            if (!prm.f) throw ConfigError("steady_states: drift system needs f");
            rep.roots = num::find_roots_scan(
                [&](double I) { return prm.f->value(I) - pl.mu; }, 0.0, search_hi, 4000, 1e-6);
            const double scale = std::pow(pl.mu, pl.k * prm.p) * prm.Mp;
            for (double I : rep.roots) {
                Equilibrium e;
                e.dim = 2;
                e.y = {1.0, I / scale, 0.0};  // Z and Q coincide at W=1
                e.residual = rhs_residual(id, std::span<const double>(e.y.data(), 2), prm);
                rep.equilibria.push_back(e);
            }
            rep.unique = rep.equilibria.size() == 1;
            rep.note = "W_inf = 1, Z_inf = I_inf / (mu^{kp} M_p)";
            return rep;
        }
        case SystemId::WQ:
        case SystemId::WQPerturbed: {
            if (!prm.f || !prm.g) throw ConfigError("steady_states: drift+death system needs f and g");
            const double whi = std::max(1.0, 2.0 * prm.f->value(search_hi));
            rep.roots = num::find_roots_scan(
                [&](double W) { return psi_drift_death(*prm.f, *prm.g, pl.k, prm.p, prm.q, W) - W; },
                1e-6, whi, 4000, 1e-8);
            for (double W : rep.roots) {
                Equilibrium e;
                e.dim = 2;
                const double Q = std::pow(W, -pl.k * prm.q) * prm.g->inverse(W);
                e.y = {W, Q, 0.0};
                e.residual = rhs_residual(id, std::span<const double>(e.y.data(), 2), prm);
                rep.equilibria.push_back(e);
            }
            rep.unique = rep.equilibria.size() == 1;
            rep.note = "roots of psi(W) = W; Q_inf = W^{-kq} g^{-1}(W)";
            return rep;
        }
        case SystemId::VWQ: {
            if (!prm.f) throw ConfigError("steady_states: prion system needs f");
            const double mu_k1 = std::pow(pl.mu, pl.k + 1.0);
            const double qhi = prm.prion_lambda / mu_k1 * (1.0 - 1e-9);
            auto g = [&](double Q) { return prm.prion_delta * pl.mu / (prm.prion_lambda - mu_k1 * Q); };
            rep.roots = num::find_roots_scan([&](double Q) { return prm.f->value(Q) - g(Q); }, 0.0,
                                             qhi, 4000, 1e-8);
            for (double Q : rep.roots) {
                Equilibrium e;
                e.dim = 3;
                e.y = {(prm.prion_lambda - mu_k1 * Q) / prm.prion_delta, pl.mu, Q};
                e.residual = rhs_residual(id, std::span<const double>(e.y.data(), 3), prm);
                rep.equilibria.push_back(e);
            }
            rep.unique = rep.equilibria.size() == 1;
            rep.note = "W_inf = mu; Q_inf solves f(Q) = delta mu/(lambda - mu^{k+1} Q); V_inf > 0";
            return rep;
        }
        default:
            throw ConfigError("steady_states: unsupported system " + system_name(id));
    }
}

double lemma32_f(double x) {
    const double r = std::sqrt(4.0 + x * x);
    return (4.0 - 2.0 * r + x * x) / (2.0 + 0.5 * x * r + 0.5 * x * x);
}

double lemma32_omega(double alpha) {
    if (alpha == 1.0) return 0.0;
    auto g = [&](double b) {
        return ((b + 1.0) * (b + 1.0) + (b + alpha) * (b + alpha)) / (b * b + 1.0);
    };
    // critical points of g: beta^2 + (alpha-1) beta - 1 = 0
    const double x = alpha - 1.0;
    const double r = std::sqrt(x * x + 4.0);
    return std::min(g(0.5 * (-x + r)), g(0.5 * (-x - r)));
}

LyapunovEval lyapunov(double W, double Z, const ReducedParams& prm) {
    const PowerLaw& pl = prm.pl;
    const double p = prm.p, mu = pl.mu, k = pl.k;
    if (!(W > 0.0) || !(Z > 0.0)) throw ConstraintError("lyapunov: W, Z must be > 0");
    if (p == 1.0) throw ConstraintError("lyapunov: p == 1 uses the scalar Z-equation path");
    const double sqp = std::sqrt(p);
    const double ap = 1.0 / (sqp + 1.0);
    const double am = 1.0 / (sqp - 1.0);
    const double a2 = ap * ap + am * am;

    const double G = W - 1.0 - std::log(W);
    const double Zlo = std::max(Z, 1e-8);
    const double F = num::adaptive_simpson(
        [&](double z) { return (mu - prm.f_p(z)) / z; }, 1.0, Zlo, 1e-10);

    LyapunovEval ev;
    ev.omega = lemma32_omega(am / ap);
    ev.L = 2.0 * k * mu * G + a2 * F;
    const double fp = prm.f_p(Z);
    const double r1 = mu * (W - 1.0);
    const double r2 = mu - fp;
    ev.D = ev.omega * (r1 * r1 + ap * ap * p * r2 * r2);
    const double s1 = r1 + ap * sqp * r2;
    const double s2 = r1 + am * sqp * r2;
    ev.two_squares = s1 * s1 + s2 * s2;
    // chain rule through the WZ rhs
    ReducedState s;
    s.id = SystemId::WZ;
    s.y = {W, Z, 0.0};
    std::array<double, 3> r{};
    reduced_rhs(s, prm, nullptr, std::span<double>(r.data(), 2));
    const double dLdW = 2.0 * k * mu * (1.0 - 1.0 / W);
    const double dLdZ = a2 * (mu - fp) / Z;
    ev.dLdt = dLdW * r[0] + dLdZ * r[1];
    return ev;
}

std::string to_string(StabilityClass c) {
    switch (c) {
        case StabilityClass::StableNode: return "stable node";
        case StabilityClass::StableFocus: return "stable focus";
        case StabilityClass::UnstableNode: return "unstable node";
        case StabilityClass::UnstableFocus: return "unstable focus";
        case StabilityClass::Saddle: return "saddle";
        case StabilityClass::HopfMarginal: return "hopf-marginal";
        case StabilityClass::DegenerateNode: return "degenerate node";
    }
    return "?";
}

bool routh_hurwitz_stable(double T, double M, double D) {
    return T < 0.0 && D < 0.0 && M * T < D;
}

std::array<std::complex<double>, 3> eigenvalues_from_invariants(double T, double M, double D) {
    return num::solve_cubic(-T, M, -D);
}

namespace {

void analytic_jacobian(SystemId id, std::span<const double> y, const ReducedParams& prm,
                       const PeriodicControl* ctl, std::array<std::array<double, 3>, 3>& J) {
    const PowerLaw& pl = prm.pl;
    const double k = pl.k, mu = pl.mu, p = prm.p, q = prm.q;
    switch (id) {
        case SystemId::WZ:
        case SystemId::WZPerturbed: {
            const double W = y[0], Z = y[1];
            const double fp = prm.f_p(Z), fpd = prm.f_p_deriv(Z);
            J[0][0] = -(mu - fp) / k - mu / k * (2.0 * W - 1.0);
            J[0][1] = W * fpd / k;
            J[1][0] = -(p - 1.0) * mu * Z;
            J[1][1] = -p * (mu - fp) + p * Z * fpd - (p - 1.0) * mu * (W - 1.0);
            return;
        }
        case SystemId::WQDrift: {
            const double W = y[0], Q = y[1];
            const double Wkp = std::pow(W, k * p);
            const double fp = prm.f_p(Wkp * Q), fpd = prm.f_p_deriv(Wkp * Q);
            J[0][0] = (fp - mu * W) / k + W / k * (fpd * k * p * std::pow(W, k * p - 1.0) * Q - mu);
            J[0][1] = W / k * fpd * Wkp;
            J[1][0] = mu * Q;
            J[1][1] = mu * (W - 1.0);
            return;
        }
        case SystemId::WQ:
        case SystemId::WQPerturbed: {
            const double W = y[0], Q = y[1];
            const double Wkp = std::pow(W, k * p), Wkq = std::pow(W, k * q);
            const double f = prm.f->value(Wkp * Q), fd = prm.f->deriv(Wkp * Q);
            const double gd = prm.g->deriv(Wkq * Q);
            J[0][0] = (f - W) / k + W / k * (fd * k * p * std::pow(W, k * p - 1.0) * Q - 1.0);
            J[0][1] = std::pow(W, k * p + 1.0) * fd / k;
            J[1][0] = Q * (1.0 - gd * k * q * std::pow(W, k * q - 1.0) * Q);
            J[1][1] = (W - prm.g->value(Wkq * Q)) - Q * gd * Wkq;
            return;
        }
        case SystemId::VWQ: {
            const double V = y[0], W = y[1], Q = y[2];
            const double A = std::pow(W / mu, k * p) * Q;
            const double f = prm.f->value(A), fd = prm.f->deriv(A);
            const double Wk = std::pow(W, k);
            J[0][0] = -(prm.prion_delta + f * Wk * Q);
            J[0][1] = -V * Q * k * std::pow(W, k - 1.0) * (fd * p * A + f);
            J[0][2] = -V * Wk * (fd * A + f);
            J[1][0] = W / k * f;
            J[1][1] = (f * V - W) / k + p * V * A * fd - W / k;
            J[1][2] = W / k * V * fd * (A / Q);
            J[2][0] = 0.0;
            J[2][1] = Q;
            J[2][2] = W - mu;
            return;
        }
        case SystemId::UP: {
            if (!ctl) throw ConfigError("local_stability(UP): needs a control");
            const double muR = mu * ctl->R.mean();
            J[0][0] = -muR;
            J[0][1] = pl.beta;
            J[1][0] = pl.tau * ctl->V.mean();
            J[1][1] = -muR;
            return;
        }
        default:
            throw ConfigError("local_stability: unsupported system " + system_name(id));
    }
}

StabilityClass classify_2x2(double T, double D, double scale) {
    const double tiny = 1e-12 * std::max(1.0, scale);
    if (D < -tiny) return StabilityClass::Saddle;
    if (std::abs(T) <= tiny) return StabilityClass::HopfMarginal;
    const double disc = T * T - 4.0 * D;
    if (std::abs(disc) <= 1e-12 * std::max(1.0, T * T)) return StabilityClass::DegenerateNode;
    if (T < 0.0) return disc < 0.0 ? StabilityClass::StableFocus : StabilityClass::StableNode;
    return disc < 0.0 ? StabilityClass::UnstableFocus : StabilityClass::UnstableNode;
}

}  // namespace

StabilityReport local_stability(SystemId id, std::span<const double> eq, const ReducedParams& prm,
                                const PeriodicControl* ctl) {
    const int dim = system_dim(id);
    StabilityReport rep;
    rep.dim = dim;
    analytic_jacobian(id, eq, prm, ctl, rep.jacobian);

    // central finite differences guard the closed-form transcription
    ReducedState s;
    s.id = id;
    s.t = 0.0;
    for (int c = 0; c < dim; ++c) s.y[static_cast<size_t>(c)] = eq[static_cast<size_t>(c)];
    double scale = 0.0;
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
            scale = std::max(scale, std::abs(rep.jacobian[static_cast<size_t>(i)][static_cast<size_t>(j)]));
    for (int j = 0; j < dim; ++j) {
        const auto ju = static_cast<size_t>(j);
        // step relative to the component: Z-type variables can be O(M_p^{-1})
        const double h = 1e-6 * std::max(std::abs(eq[ju]), 1e-12);
        ReducedState sp = s, sm = s;
        sp.y[ju] += h;
        sm.y[ju] -= h;
        std::array<double, 3> rp{}, rm{};
        reduced_rhs(sp, prm, ctl, std::span<double>(rp.data(), static_cast<size_t>(dim)));
        reduced_rhs(sm, prm, ctl, std::span<double>(rm.data(), static_cast<size_t>(dim)));
        for (int i = 0; i < dim; ++i) {
            const auto iu = static_cast<size_t>(i);
            const double fd = (rp[iu] - rm[iu]) / (2.0 * h);
            const double err = std::abs(fd - rep.jacobian[iu][ju]) / std::max(1.0, scale);
            rep.fd_max_rel_err = std::max(rep.fd_max_rel_err, err);
        }
    }
    if (rep.fd_max_rel_err > 1e-5) {
        std::ostringstream os;
        os << "local_stability(" << system_name(id)
           << "): analytic Jacobian disagrees with finite differences (rel err "
           << rep.fd_max_rel_err << "); transcription bug guard";
        throw NumericalError(os.str());
    }

    const auto& J = rep.jacobian;
    if (dim == 2) {
        rep.trace = J[0][0] + J[1][1];
        rep.det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
        const double disc = rep.trace * rep.trace - 4.0 * rep.det;
        const std::complex<double> sq = std::sqrt(std::complex<double>(disc, 0.0));
        rep.eigenvalues[0] = 0.5 * (rep.trace + sq);
        rep.eigenvalues[1] = 0.5 * (rep.trace - sq);
        rep.cls = classify_2x2(rep.trace, rep.det, scale);
    } else {
        rep.trace = J[0][0] + J[1][1] + J[2][2];
        rep.minor_sum = J[0][0] * J[1][1] - J[0][1] * J[1][0] + J[0][0] * J[2][2] -
                        J[0][2] * J[2][0] + J[1][1] * J[2][2] - J[1][2] * J[2][1];
        rep.det = J[0][0] * (J[1][1] * J[2][2] - J[1][2] * J[2][1]) -
                  J[0][1] * (J[1][0] * J[2][2] - J[1][2] * J[2][0]) +
                  J[0][2] * (J[1][0] * J[2][1] - J[1][1] * J[2][0]);
        rep.eigenvalues = eigenvalues_from_invariants(rep.trace, rep.minor_sum, rep.det);
        double max_re = rep.eigenvalues[0].real();
        double max_im = 0.0;
        bool any_pos = false, any_neg = false, complex_pair = false;
        for (const auto& ev : rep.eigenvalues) {
            max_re = std::max(max_re, ev.real());
            max_im = std::max(max_im, std::abs(ev.imag()));
            if (ev.real() > 1e-10 * std::max(1.0, scale)) any_pos = true;
            if (ev.real() < -1e-10 * std::max(1.0, scale)) any_neg = true;
            if (std::abs(ev.imag()) > 1e-10 * std::max(1.0, scale)) complex_pair = true;
        }
        if (!any_pos && !any_neg) {
            rep.cls = StabilityClass::HopfMarginal;
        } else if (!any_pos) {
            rep.cls = complex_pair ? StabilityClass::StableFocus : StabilityClass::StableNode;
        } else if (!any_neg) {
            rep.cls = complex_pair ? StabilityClass::UnstableFocus : StabilityClass::UnstableNode;
        } else {
            rep.cls = complex_pair
                          ? (max_re > 0 ? StabilityClass::UnstableFocus : StabilityClass::StableFocus)
                          : StabilityClass::Saddle;
        }
        if (std::abs(max_re) <= 1e-10 * std::max(1.0, scale)) rep.cls = StabilityClass::HopfMarginal;
    }

    if (id == SystemId::WQ || id == SystemId::WQPerturbed) {
        const double W = eq[0], Q = eq[1];
        const double psid = psi_drift_death_deriv(*prm.f, *prm.g, prm.pl.k, prm.p, prm.q, W);
        const double gd = prm.g->deriv(std::pow(W, prm.pl.k * prm.q) * Q);
        rep.det_via_psi =
            std::pow(W, prm.pl.k * prm.q + 1.0) * Q * gd * (1.0 - psid) / prm.pl.k;
        rep.instability_condition = rep.trace > 0.0;
    }
    return rep;
}

HopfReport hopf_scan(const ReducedParams& prm, int samples, double p_tol) {
    const PowerLaw& pl = prm.pl;
    HopfReport rep;
    ReducedParams base = prm;
    base.p = 0.0;  // the steady state is p-independent
    auto ss = steady_states(SystemId::VWQ, base);
    if (ss.equilibria.empty()) {
        rep.note = "no positive steady state in the bracket";
        return rep;
    }
    rep.eq = ss.equilibria.front();
    const double V = rep.eq.y[0], Q = rep.eq.y[2];
    const double mu = pl.mu, k = pl.k, delta = prm.prion_delta;
    const double f = prm.f->value(Q), fd = prm.f->deriv(Q);
    const double muk = std::pow(mu, k);

    rep.paper_small_mu_condition = mu <= (k + 1.0 / mu) * delta;
    if (!rep.paper_small_mu_condition)
        rep.note = "paper's psi(0)<0 sufficient condition mu <= (k+1/mu) delta does not apply; ";

    // invariants of the Jacobian at the steady state, affine in p
    auto T_of = [&](double p) { return -delta - muk * Q * f - mu / k + p * V * Q * fd; };
    auto M_of = [&](double p) {
        return -delta * p * V * Q * fd + delta * mu / k + std::pow(mu, k + 1.0) / k * Q * f +
               muk * V * Q * f * f - mu / k * V * Q * fd;
    };
    const double D = mu / k * V * Q * (delta * fd - muk * f * f);
    auto psi = [&](double p) { return M_of(p) * T_of(p) - D; };

    rep.p1 = (delta + mu / k + muk * Q * f) / (V * Q * fd);
    rep.psi0 = psi(0.0);
    rep.psi_at_p1 = psi(rep.p1);
    const double Tp = V * Q * fd, Mp = -delta * V * Q * fd;
    rep.psi_second = 2.0 * Mp * Tp;

    rep.psi_samples.reserve(static_cast<size_t>(samples) + 1);
    for (int i = 0; i <= samples; ++i) {
        const double p = rep.p1 * i / samples;
        rep.psi_samples.emplace_back(p, psi(p));
    }
    if (rep.psi0 < 0.0 && rep.psi_at_p1 > 0.0) {
        rep.p0 = num::bisect(psi, 0.0, rep.p1, p_tol);
        rep.p0_found = true;
        // transversality: a'(p0) = psi'(p0) / (2 (b^2 + c^2)), c = T(p0), b^2 = M(p0)
        const double psi_prime = Mp * T_of(rep.p0) + M_of(rep.p0) * Tp;
        rep.c_at_p0 = T_of(rep.p0);
        rep.b_at_p0 = std::sqrt(std::max(M_of(rep.p0), 0.0));
        rep.a_prime = psi_prime / (2.0 * (rep.b_at_p0 * rep.b_at_p0 + rep.c_at_p0 * rep.c_at_p0));
        rep.note += "hopf point located";
    } else {
        rep.note += "no sign change of psi on [0, p1]";
    }
    return rep;
}

CycleReport detect_limit_cycle(const Trajectory& traj, int section_comp, double section_value,
                               double burn_in, double hysteresis_frac, double period_tol,
                               double amp_tol) {
    CycleReport rep;
    rep.section_value = section_value;
    const auto yc = static_cast<size_t>(section_comp);
    const size_t n = traj.t.size();
    size_t start = 0;
    while (start < n && traj.t[start] < burn_in) ++start;
    if (n - start < 8) {
        rep.note = "trajectory too short after burn-in";
        return rep;
    }
    double lo = traj.y[start][yc], hi = lo;
    for (size_t i = start; i < n; ++i) {
        lo = std::min(lo, traj.y[i][yc]);
        hi = std::max(hi, traj.y[i][yc]);
    }
    const double band = hysteresis_frac * (hi - lo);
    if (!(band > 0.0)) {
        rep.note = "no amplitude after burn-in (stationary trajectory)";
        return rep;
    }
    bool armed = false;
    for (size_t i = start + 1; i < n; ++i) {
        const double a = traj.y[i - 1][yc], b = traj.y[i][yc];
        if (!armed && b < section_value - band) armed = true;
        if (armed && a < section_value && b >= section_value) {
            const double frac = (section_value - a) / (b - a);
            rep.crossing_times.push_back(traj.t[i - 1] + frac * (traj.t[i] - traj.t[i - 1]));
            armed = false;
        }
    }
    rep.crossings = static_cast<int>(rep.crossing_times.size());
    if (rep.crossings < 5) {
        rep.note = "fewer than 5 section crossings after burn-in";
        return rep;
    }
    const auto& ct = rep.crossing_times;
    std::array<double, 3> intervals{};
    for (int m = 0; m < 3; ++m)
        intervals[static_cast<size_t>(m)] = ct[ct.size() - 3 + static_cast<size_t>(m)] -
                                            ct[ct.size() - 4 + static_cast<size_t>(m)];
    rep.period = (intervals[0] + intervals[1] + intervals[2]) / 3.0;
    rep.period_drift = 0.0;
    for (double iv : intervals)
        rep.period_drift = std::max(rep.period_drift, std::abs(iv - rep.period) / rep.period);

    // per-cycle component amplitudes over the last 3 cycles
    rep.amplitude.assign(static_cast<size_t>(traj.dim), 0.0);
    rep.amplitude_drift = 0.0;
    for (int c = 0; c < traj.dim; ++c) {
        const auto cu = static_cast<size_t>(c);
        std::array<double, 3> amp{};
        for (int m = 0; m < 3; ++m) {
            const double t0 = ct[ct.size() - 4 + static_cast<size_t>(m)];
            const double t1 = ct[ct.size() - 3 + static_cast<size_t>(m)];
            double alo = 0, ahi = 0;
            bool first = true;
            for (size_t i = start; i < n; ++i) {
                if (traj.t[i] < t0 || traj.t[i] > t1) continue;
                const double v = traj.y[i][cu];
                if (first) {
                    alo = ahi = v;
                    first = false;
                } else {
                    alo = std::min(alo, v);
                    ahi = std::max(ahi, v);
                }
            }
            amp[static_cast<size_t>(m)] = ahi - alo;
        }
        const double mean = (amp[0] + amp[1] + amp[2]) / 3.0;
        rep.amplitude[cu] = amp[2];
        if (mean > 0.0)
            for (double a : amp)
                rep.amplitude_drift = std::max(rep.amplitude_drift, std::abs(a - mean) / mean);
    }
    rep.detected = rep.period_drift < period_tol && rep.amplitude_drift < amp_tol;
    rep.note = rep.detected ? "cycle detected" : "drift tolerances not met";
    return rep;
}

namespace {

double lambda10_for(const PowerLaw& pl) {
    if (pl.nu == 1.0) return pl.tau;
    if (pl.nu == 0.0 && pl.gamma == 1.0) return std::sqrt(pl.tau * pl.beta);
    throw ConstraintError("floquet_compare: requires nu=1 or (nu=0, gamma=1)");
}

}  // namespace

FloquetReport floquet_compare(const PowerLaw& pl, const PeriodicControl& ctl, const EigenPair* ep) {
    FloquetReport rep;
    const double lam10 = lambda10_for(pl);
    const double T = ctl.period();
    const double kg = pl.k * pl.gamma;
    const int N = 4096;
    const double h = T / N;

    auto wdot = [&](double t, double W) {
        return lam10 * std::pow(W, kg) / pl.k * (ctl.V(t) - W);
    };
    auto period_map = [&](double W0, std::vector<double>* store = nullptr) {
        double W = W0;
        if (store) (*store)[0] = W;
        for (int i = 0; i < N; ++i) {
            const double t = i * h;
            const double k1 = wdot(t, W);
            const double k2 = wdot(t + h / 2, W + h / 2 * k1);
            const double k3 = wdot(t + h / 2, W + h / 2 * k2);
            const double k4 = wdot(t + h, W + h * k3);
            W += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
            if (store) (*store)[static_cast<size_t>(i) + 1] = W;
        }
        return W;
    };

    // damped fixed-point iteration on the (contracting) period map, bisection fallback
    double W0 = ctl.V.mean();
    bool ok = false;
    for (int it = 0; it < 400; ++it) {
        const double PW = period_map(W0);
        if (std::abs(PW - W0) < 1e-13 * std::max(1.0, W0)) {
            ok = true;
            break;
        }
        W0 = 0.3 * W0 + 0.7 * PW;
    }
    if (!ok) {
        const double lo = 0.5 * ctl.V.min_on_period();
        double hi = 2.0 * std::abs(ctl.V.mean());
        for (int g = 0; g < 60 && period_map(hi) > hi; ++g) hi *= 2.0;
        W0 = num::bisect([&](double w) { return period_map(w) - w; }, lo, hi, 1e-13);
    }
    rep.W_periodic_start = W0;
    std::vector<double> orbit(static_cast<size_t>(N) + 1);
    rep.shooting_residual = std::abs(period_map(W0, &orbit) - W0);
    if (!(rep.shooting_residual < 1e-8 * std::max(1.0, W0)))
        throw NumericalError("floquet_compare: shooting did not converge (residual " +
                             std::to_string(rep.shooting_residual) + ")");

    rep.orbit_t.resize(orbit.size());
    rep.orbit_W = orbit;
    rep.orbit_cumlam.resize(orbit.size());
    auto lam_inst = [&](double t, double W) {
        return lam10 * std::pow(W, kg) - pl.mu * ctl.R(t);
    };
    double cum = 0.0;
    rep.orbit_cumlam[0] = 0.0;
    for (int i = 0; i < N; ++i) {
        const double t0 = i * h, t1 = (i + 1) * h;
        rep.orbit_t[static_cast<size_t>(i)] = t0;
        cum += 0.5 * h * (lam_inst(t0, orbit[static_cast<size_t>(i)]) +
                          lam_inst(t1, orbit[static_cast<size_t>(i) + 1]));
        rep.orbit_cumlam[static_cast<size_t>(i) + 1] = cum;
    }
    rep.orbit_t.back() = T;
    rep.lambda_F = cum / T;
    rep.lambda_of_means = lambda_vr(lam10, ctl.V.mean(), ctl.R.mean(), pl);
    rep.mean_of_lambda =
        num::simpson([&](double t) { return lambda_vr(lam10, ctl.V(t), ctl.R(t), pl); }, 0.0, T,
                     4096) / T;

    if (ep && pl.nu == 1.0) {
        FloquetEigenvector uf(rep, *ep, pl);
        const auto u0 = uf.profile(0.0);
        const auto uT = uf.profile(T);
        double gap = 0.0;
        const auto w = ep->grid.widths();
        for (size_t i = 0; i < u0.size(); ++i) gap += std::abs(uT[i] - u0[i]) * w[i];
        rep.uf_periodicity_gap = gap;
    }
    return rep;
}

FloquetEigenvector::FloquetEigenvector(const FloquetReport& rep, const EigenPair& ep,
                                       const PowerLaw& pl)
    : ep_(&ep),
      pl_(pl),
      lambda_F_(rep.lambda_F),
      period_(rep.orbit_t.back()),
      W_of_t_(rep.orbit_t, rep.orbit_W),
      cumlam_of_t_(rep.orbit_t, rep.orbit_cumlam) {}

std::vector<double> FloquetEigenvector::profile(double t) const {
    const double W = W_of_t_(std::clamp(t, 0.0, period_));
    const double E = cumlam_of_t_(std::clamp(t, 0.0, period_)) - lambda_F_ * t;
    auto u = rescale_eigenvector(ep_->U, W, pl_.k, ep_->grid);
    const double g = std::exp(E);
    for (auto& v : u) v *= g;
    return u;
}

double fit_decay_rate(std::span<const double> t, std::span<const double> values,
                      double floor_frac) {
    double vmax = 0.0;
    for (double v : values) vmax = std::max(vmax, std::abs(v));
    std::vector<double> ts, ys;
    for (size_t i = 0; i < t.size(); ++i) {
        if (std::abs(values[i]) > floor_frac * vmax) {
            ts.push_back(t[i]);
            ys.push_back(std::log(std::abs(values[i])));
        }
    }
    if (ts.size() < 2) return 0.0;
    return -num::linear_fit(ts, ys).second;
}

}  // namespace fraglab
