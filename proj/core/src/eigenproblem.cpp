#include "fraglab/eigenproblem.hpp"

#include <cmath>
#include <sstream>

#include "fraglab/errors.hpp"
#include "fraglab/numerics.hpp"

namespace fraglab {

namespace {

double l1_residual(const DiscreteOperator& op, std::span<const double> u, const Grid& grid,
                   bool transpose, TransportOrder order) {
    const size_t n = u.size();
    std::vector<double> Au(n);
    if (transpose) {
        op.apply_transpose(u, Au);
    } else {
        op.apply(u, Au, 1.0, 0.0, order);
    }
    // Rayleigh-style eigenvalue in the quadrature pairing
    double num = 0.0, den = 0.0;
    const auto w = grid.widths();
    for (size_t i = 0; i < n; ++i) {
        num += Au[i] * w[i];
        den += u[i] * w[i];
    }
    const double lam = num / den;
    double r = 0.0, scale = 0.0;
    for (size_t i = 0; i < n; ++i) {
        r += std::abs(Au[i] - lam * u[i]) * w[i];
        scale += std::abs(u[i]) * w[i];
    }
    return r / (scale * (1.0 + std::abs(lam)));
}

}  // namespace

EigenPair solve_perron(const PowerLaw& pl, const Kernel& kernel, const Grid& grid,
                       const PerronOptions& opt) {
    DiscreteOperator op(grid, pl, kernel);
    return solve_perron(op, opt);
}

EigenPair solve_perron(const DiscreteOperator& op, const PerronOptions& opt) {
    const Grid& grid = op.grid();
    const auto x = grid.centers();
    const auto w = grid.widths();
    const size_t n = x.size();

    const double dt = opt.cfl_frac * op.positivity_dt(1.0, 0.0, opt.order) / 0.9;
    const int nsub = std::max(1, static_cast<int>(std::lround(opt.sweep_time / dt)));

    std::vector<double> u(n), Au(n);
    const double x_scale = grid.x_max() / 6.0;
    for (size_t i = 0; i < n; ++i) u[i] = x[i] * std::exp(-2.0 * x[i] / x_scale);
    double mass = grid.integrate(u);
    for (auto& v : u) v /= mass;

    double lambda = 0.0, lambda_prev = 0.0;
    bool have_prev = false, converged = false;
    int sweeps = 0;
    for (; sweeps < opt.max_sweeps; ++sweeps) {
        for (int s = 0; s < nsub; ++s) {
            op.apply(u, Au, 1.0, 0.0, opt.order);
            for (size_t i = 0; i < n; ++i) u[i] += dt * Au[i];
        }
        mass = grid.integrate(u);
        if (!(mass > 0.0) || !std::isfinite(mass))
            throw NumericalError("solve_perron: iteration lost positivity/finiteness");
        lambda = std::log(mass) / (nsub * dt);
        for (auto& v : u) v /= mass;
        if (have_prev && std::abs(lambda - lambda_prev) < opt.tol) {
            converged = true;
            break;
        }
        lambda_prev = lambda;
        have_prev = true;
    }
    if (!converged) {
        std::ostringstream os;
        os << "solve_perron: eigenvalue drift " << std::abs(lambda - lambda_prev)
           << " still above tol " << opt.tol << " after " << sweeps
           << " sweeps (residual " << l1_residual(op, u, grid, false, opt.order) << ")";
        throw NumericalError(os.str());
    }

    // final extraction sweep at reduced dt: log(growth)/dt with the
    // ln(1+dt*Lambda)/dt bias scaled down by extraction_dt_frac
    const double dtf = dt * opt.extraction_dt_frac;
    const int nf = std::max(1, static_cast<int>(std::lround(opt.sweep_time / dtf)));
    for (int s = 0; s < nf; ++s) {
        op.apply(u, Au, 1.0, 0.0, opt.order);
        for (size_t i = 0; i < n; ++i) u[i] += dtf * Au[i];
    }
    mass = grid.integrate(u);
    lambda = std::log(mass) / (nf * dtf);
    for (auto& v : u) v /= mass;

    EigenPair ep;
    ep.lambda = lambda;
    ep.U = u;
    ep.grid = grid;
    ep.residual = l1_residual(op, u, grid, false, opt.order);
    if (opt.with_adjoint) {
        ep.phi = solve_adjoint(op, ep.U, opt, &ep.lambda_adjoint, &ep.residual_phi);
    }
    return ep;
}

std::vector<double> solve_adjoint(const DiscreteOperator& op, std::span<const double> U,
                                  const PerronOptions& opt, double* lambda_out,
                                  double* residual_out) {
    const Grid& grid = op.grid();
    const auto w = grid.widths();
    const size_t n = U.size();
    const double dt = opt.cfl_frac * op.positivity_dt(1.0, 0.0, TransportOrder::First) / 0.9;
    const int nsub = std::max(1, static_cast<int>(std::lround(opt.sweep_time / dt)));

    std::vector<double> phi(n, 1.0), Ap(n), prev;
    bool converged = false;
    for (int sweeps = 0; sweeps < opt.max_sweeps; ++sweeps) {
        for (int s = 0; s < nsub; ++s) {
            op.apply_transpose(phi, Ap);
            for (size_t i = 0; i < n; ++i) phi[i] += dt * Ap[i];
        }
        const double mass = grid.integrate(phi);
        if (!(mass > 0.0) || !std::isfinite(mass))
            throw NumericalError("solve_adjoint: iteration lost positivity/finiteness");
        for (auto& v : phi) v /= mass;
        if (!prev.empty()) {
            double diff = 0.0, scale = 0.0;
            for (size_t i = 0; i < n; ++i) {
                diff = std::max(diff, std::abs(phi[i] - prev[i]));
                scale = std::max(scale, std::abs(phi[i]));
            }
            // sup-norm stagnation of the normalized vector; the <phi,U> pairing is
            // blind to convergence because <A^T phi, U> = Lambda <phi, U> identically
            if (diff < 0.1 * opt.tol * scale) {
                converged = true;
                break;
            }
        }
        prev = phi;
    }
    if (!converged) throw NumericalError("solve_adjoint: power iteration did not converge");

    const double dtf = dt * opt.extraction_dt_frac;
    const int nf = std::max(1, static_cast<int>(std::lround(opt.sweep_time / dtf)));
    const double m0 = grid.integrate(phi);
    for (int s = 0; s < nf; ++s) {
        op.apply_transpose(phi, Ap);
        for (size_t i = 0; i < n; ++i) phi[i] += dtf * Ap[i];
    }
    if (lambda_out) *lambda_out = std::log(grid.integrate(phi) / m0) / (nf * dtf);
    if (residual_out) *residual_out = l1_residual(op, phi, grid, true, TransportOrder::First);

    double pair = 0.0;
    for (size_t i = 0; i < n; ++i) pair += phi[i] * U[i] * w[i];
    for (auto& v : phi) v /= pair;
    return phi;
}

double closed_form_normalization(const PowerLaw& pl) {
    const double s = pl.beta / (pl.tau * pl.gamma);
    return pl.gamma * std::pow(s, 1.0 / pl.gamma) / std::exp(std::lgamma(1.0 / pl.gamma));
}

double closed_form_moment(const PowerLaw& pl, double alpha) {
    const double s = pl.beta / (pl.tau * pl.gamma);
    const double C = closed_form_normalization(pl);
    const double a = (alpha + 1.0) / pl.gamma;
    return C * std::exp(std::lgamma(a) - a * std::log(s)) / pl.gamma;
}

std::vector<double> closed_form_U(const PowerLaw& pl, const Kernel& kernel, const Grid& grid) {
    if (pl.nu != 1.0 || kernel.kind() != Kernel::Kind::ConstantTwo)
        throw ConstraintError("closed_form_U: requires nu == 1 and kappa == 2");
    const double s = pl.beta / (pl.tau * pl.gamma);
    const double C = closed_form_normalization(pl);
    const auto x = grid.centers();
    std::vector<double> U(x.size());
    for (size_t i = 0; i < x.size(); ++i)
        U[i] = C * std::exp(std::max(-s * std::pow(x[i], pl.gamma), -700.0));
    return U;
}

double lambda_vr(double lambda0, double V, double R, const PowerLaw& pl) {
    if (!(V > 0.0)) throw std::domain_error("lambda_vr: V must be > 0");
    if (!(R >= 0.0)) throw std::domain_error("lambda_vr: R must be >= 0");
    return std::pow(V, pl.k * pl.gamma) * lambda0 - R * pl.mu;
}

std::vector<double> rescale_eigenvector(std::span<const double> U, double V, double k,
                                        const Grid& grid, double mass_tol) {
    if (!(V > 0.0)) throw std::domain_error("rescale_eigenvector: V must be > 0");
    const auto x = grid.centers();
    // extend to x=0 by clamped linear extrapolation so contracting dilations do
    // not zero out the first cells
    std::vector<double> xs(x.size() + 1), ys(U.size() + 1);
    xs[0] = 0.0;
    ys[0] = std::max(0.0, U[0] - x[0] * (U[1] - U[0]) / (x[1] - x[0]));
    std::copy(x.begin(), x.end(), xs.begin() + 1);
    std::copy(U.begin(), U.end(), ys.begin() + 1);
    num::Pchip interp(std::move(xs), std::move(ys));
    const double scale = std::pow(V, -k);
    std::vector<double> out(U.size());
    for (size_t i = 0; i < x.size(); ++i) out[i] = std::max(0.0, scale * interp(scale * x[i]));
    const double mass = grid.integrate(out);
    if (std::abs(mass - 1.0) > mass_tol) {
        std::ostringstream os;
        os << "rescale_eigenvector: dilated mass " << mass << " deviates from 1 beyond "
           << mass_tol << " (support truncated by the grid for V=" << V << ")";
        throw NumericalError(os.str());
    }
    return out;
}

}  // namespace fraglab
