#include "fraglab/reduced.hpp"

#include <cmath>
#include <sstream>

#include "fraglab/errors.hpp"

namespace fraglab {

int system_dim(SystemId id) {
    switch (id) {
        case SystemId::WOde: return 1;
        case SystemId::VWQ: return 3;
        default: return 2;
    }
}

std::string system_name(SystemId id) {
    switch (id) {
        case SystemId::WOde: return "w-ode";
        case SystemId::WZ: return "wz";
        case SystemId::WZPerturbed: return "wz-perturbed";
        case SystemId::WQDrift: return "wq-drift";
        case SystemId::WQ: return "wq";
        case SystemId::WQPerturbed: return "wq-perturbed";
        case SystemId::VWQ: return "vwq";
        case SystemId::UP: return "up";
    }
    return "?";
}

std::vector<std::string> component_names(SystemId id) {
    switch (id) {
        case SystemId::WOde: return {"W"};
        case SystemId::WZ:
        case SystemId::WZPerturbed: return {"W", "Z"};
        case SystemId::WQDrift:
        case SystemId::WQ:
        case SystemId::WQPerturbed: return {"W", "Q"};
        case SystemId::VWQ: return {"V", "W", "Q"};
        case SystemId::UP: return {"U", "P"};
    }
    return {};
}

double ReducedParams::f_p(double I) const {
    return f->value(I * std::pow(pl.mu, pl.k * p) * Mp);
}

double ReducedParams::f_p_deriv(double I) const {
    const double c = std::pow(pl.mu, pl.k * p) * Mp;
    return f->deriv(I * c) * c;
}

namespace {

inline double eval_eps(const std::function<double(double)>& h, double t) {
    return h ? h(t) : 0.0;
}

}  // namespace

void reduced_rhs(const ReducedState& s, const ReducedParams& prm, const PeriodicControl* control,
                 std::span<double> out) {
    const PowerLaw& pl = prm.pl;
    const double k = pl.k, mu = pl.mu;
    switch (s.id) {
        case SystemId::WOde: {
            if (!control) throw ConfigError("WOde needs a control (V)");
            const double W = s.y[0];
            const double lamW = prm.lambda10 * std::pow(W, k * pl.gamma);
            out[0] = lamW / k * (control->V(s.t) - prm.V1(s.t) * W);
            return;
        }
        case SystemId::WZ:
        case SystemId::WZPerturbed: {
            const double W = s.y[0], Z = s.y[1];
            const double e = s.id == SystemId::WZPerturbed ? eval_eps(prm.eps_p, s.t) : 0.0;
            const double fp = prm.f_p((1.0 + e) * Z);
            out[0] = -(1.0 / k) * W * (mu - fp) - (mu / k) * W * (W - 1.0);
            out[1] = -prm.p * Z * (mu - fp) - (prm.p - 1.0) * mu * Z * (W - 1.0);
            return;
        }
        case SystemId::WQDrift: {
            const double W = s.y[0], Q = s.y[1];
            const double fp = prm.f_p(std::pow(W, k * prm.p) * Q);
            out[0] = W / k * (fp - mu * W);
            out[1] = mu * Q * (W - 1.0);
            return;
        }
        case SystemId::WQ:
        case SystemId::WQPerturbed: {
            const double W = s.y[0], Q = s.y[1];
            const bool pert = s.id == SystemId::WQPerturbed;
            const double ep = pert ? eval_eps(prm.eps_p, s.t) : 0.0;
            const double eq = pert ? eval_eps(prm.eps_q, s.t) : 0.0;
            out[0] = W / k * (prm.f->value((1.0 + ep) * std::pow(W, k * prm.p) * Q) - W);
            out[1] = Q * (W - prm.g->value((1.0 + eq) * std::pow(W, k * prm.q) * Q));
            return;
        }
        case SystemId::VWQ: {
            const double V = s.y[0], W = s.y[1], Q = s.y[2];
            const double fv = prm.f->value(std::pow(W / mu, k * prm.p) * Q);
            out[0] = prm.prion_lambda - V * (prm.prion_delta + fv * std::pow(W, k) * Q);
            out[1] = W / k * (fv * V - W);
            out[2] = Q * (W - mu);
            return;
        }
        case SystemId::UP: {
            if (!control) throw ConfigError("UP needs a control (V,R)");
            const double U = s.y[0], P = s.y[1];
            const double muR = mu * control->R(s.t);
            out[0] = -muR * U + pl.beta * P;
            out[1] = pl.tau * control->V(s.t) * U - muR * P;
            return;
        }
    }
}

std::vector<double> Trajectory::component(int c) const {
    std::vector<double> out(y.size());
    for (size_t i = 0; i < y.size(); ++i) out[i] = y[i][static_cast<size_t>(c)];
    return out;
}

namespace {

using Vec3 = std::array<double, 3>;

Vec3 rk4_step(const ReducedState& s, const ReducedParams& prm, const PeriodicControl* ctl,
              double dt, int dim) {
    Vec3 k1{}, k2{}, k3{}, k4{};
    ReducedState tmp = s;
    reduced_rhs(s, prm, ctl, std::span<double>(k1.data(), static_cast<size_t>(dim)));
    for (int c = 0; c < dim; ++c) tmp.y[static_cast<size_t>(c)] = s.y[static_cast<size_t>(c)] + 0.5 * dt * k1[static_cast<size_t>(c)];
    tmp.t = s.t + 0.5 * dt;
    reduced_rhs(tmp, prm, ctl, std::span<double>(k2.data(), static_cast<size_t>(dim)));
    for (int c = 0; c < dim; ++c) tmp.y[static_cast<size_t>(c)] = s.y[static_cast<size_t>(c)] + 0.5 * dt * k2[static_cast<size_t>(c)];
    reduced_rhs(tmp, prm, ctl, std::span<double>(k3.data(), static_cast<size_t>(dim)));
    for (int c = 0; c < dim; ++c) tmp.y[static_cast<size_t>(c)] = s.y[static_cast<size_t>(c)] + dt * k3[static_cast<size_t>(c)];
    tmp.t = s.t + dt;
    reduced_rhs(tmp, prm, ctl, std::span<double>(k4.data(), static_cast<size_t>(dim)));
    Vec3 out = s.y;
    for (int c = 0; c < dim; ++c) {
        const auto ci = static_cast<size_t>(c);
        out[ci] += dt / 6.0 * (k1[ci] + 2.0 * k2[ci] + 2.0 * k3[ci] + k4[ci]);
    }
    return out;
}

}  // namespace

Trajectory integrate(SystemId id, std::span<const double> y0, const ReducedParams& prm,
                     const IntegrateOptions& opt, const PeriodicControl* control) {
    const int dim = system_dim(id);
    if (static_cast<int>(y0.size()) != dim)
        throw ConfigError("integrate: initial state dimension mismatch for " + system_name(id));
    if (!(opt.dt > 0.0)) throw ConfigError("integrate: dt must be > 0");
    ReducedState s;
    s.id = id;
    s.t = 0.0;
    for (int c = 0; c < dim; ++c) s.y[static_cast<size_t>(c)] = y0[static_cast<size_t>(c)];
    if (opt.check_positive)
        for (int c = 0; c < dim; ++c)
            if (!(s.y[static_cast<size_t>(c)] > 0.0))
                throw ConstraintError("integrate: initial state must be positive");

    Trajectory traj;
    traj.id = id;
    traj.dim = dim;
    const auto n_steps = static_cast<long>(std::ceil(opt.t_end / opt.dt - 1e-12));
    traj.t.reserve(static_cast<size_t>(n_steps / opt.stride) + 2);
    traj.y.reserve(static_cast<size_t>(n_steps / opt.stride) + 2);
    traj.t.push_back(0.0);
    traj.y.push_back(s.y);

    Vec3 rhs_now{};
    for (long step = 0; step < n_steps; ++step) {
        const double dt = std::min(opt.dt, opt.t_end - s.t);
        reduced_rhs(s, prm, control, std::span<double>(rhs_now.data(), static_cast<size_t>(dim)));
        double sup = 0.0;
        for (int c = 0; c < dim; ++c) sup = std::max(sup, std::abs(rhs_now[static_cast<size_t>(c)]));
        int halvings = 0;
        while (sup * std::pow(0.5, halvings) > opt.rhs_sup_limit && halvings < 24) ++halvings;
        const int sub = 1 << halvings;
        const double h = dt / sub;
        for (int m = 0; m < sub; ++m) {
            s.y = rk4_step(s, prm, control, h, dim);
            s.t += h;
        }
        for (int c = 0; c < dim; ++c) {
            const double v = s.y[static_cast<size_t>(c)];
            if (!std::isfinite(v) || (opt.check_positive && !(v > 0.0))) {
                std::ostringstream os;
                os << "integrate(" << system_name(id) << "): component "
                   << component_names(id)[static_cast<size_t>(c)] << " left the positive orthant at t="
                   << s.t << " (last valid state at t=" << traj.t.back() << ")";
                throw NumericalError(os.str());
            }
        }
        if ((step + 1) % opt.stride == 0 || step + 1 == n_steps) {
            traj.t.push_back(s.t);
            traj.y.push_back(s.y);
        }
    }
    return traj;
}

double bernoulli_W(double W0, const num::Fn& V1, const num::Fn& V2, double t, const PowerLaw& pl,
                   int steps) {
    if (!(W0 > 0.0)) throw ConstraintError("bernoulli_W: W0 must be > 0");
    if (t == 0.0) return W0;
    if (steps <= 0) steps = std::max(64, static_cast<int>(std::ceil(t / 0.01)));
    const double tk = pl.tau / pl.k;
    const double h = t / steps;
    // C2 at half-grid resolution, then one Simpson pane per outer step
    const auto C2 = num::cumulative_simpson(V2, 0.0, 0.5 * h, 2 * steps);
    auto xi = [&](int j) { return V1(0.5 * h * j) * std::exp(tk * C2[static_cast<size_t>(j)]); };
    double I = 0.0;
    for (int i = 0; i < steps; ++i) I += h / 6.0 * (xi(2 * i) + 4.0 * xi(2 * i + 1) + xi(2 * i + 2));
    const double denom = 1.0 + W0 * tk * I;
    if (!(denom > 0.0)) throw NumericalError("bernoulli_W: denominator lost positivity");
    return W0 * std::exp(tk * C2.back()) / denom;
}

MomentSeries moments_reduced(const Trajectory& w_traj, const PeriodicFn& V, const PeriodicFn& R,
                             double alpha, const PowerLaw& pl, double lambda10,
                             const std::function<double(double)>& eigen_moment) {
    if (w_traj.dim != 1) throw ConfigError("moments_reduced: expects a W-ODE trajectory");
    const double k = pl.k;
    const double Ma = eigen_moment(alpha);
    const double Mam = eigen_moment(alpha + pl.nu - 1.0);
    const double Mag = eigen_moment(alpha + pl.gamma);
    const double a_al = Ma / Mam;
    const double b_al = Ma / Mag;

    MomentSeries out;
    const size_t n = w_traj.t.size();
    out.t = w_traj.t;
    out.value.resize(n);
    out.rhs.resize(n);
    // cumulative int Lambda(W,R) by trapezoid on the trajectory samples
    double E = 0.0;
    double prev_lam = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double W = w_traj.y[i][0];
        const double lam = lambda10 * std::pow(W, k * pl.gamma) - pl.mu * R(w_traj.t[i]);
        if (i > 0) E += 0.5 * (lam + prev_lam) * (w_traj.t[i] - w_traj.t[i - 1]);
        prev_lam = lam;
        const double growth = std::exp(E);
        const double Mal = Ma * std::pow(W, k * alpha) * growth;
        const double Malm = Mam * std::pow(W, k * (alpha + pl.nu - 1.0)) * growth;
        const double Malg = Mag * std::pow(W, k * (alpha + pl.gamma)) * growth;
        out.value[i] = Mal;
        out.rhs[i] = alpha * lambda10 * a_al * V(w_traj.t[i]) * Malm +
                     (1.0 - alpha) * lambda10 * b_al * Malg - pl.mu * R(w_traj.t[i]) * Mal;
    }
    return out;
}

}  // namespace fraglab
