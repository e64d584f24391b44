#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fraglab/errors.hpp"

namespace fraglab {

/// Powerlaw coefficient bundle: growth tau*x^nu, fragmentation rate beta*x^gamma,
/// constant death rate mu, and the derived dilation parameter k = 1/(gamma+1-nu).
struct PowerLaw {
    double tau = 1.0;
    double nu = 1.0;
    double beta = 1.0;
    double gamma = 1.0;
    double mu = 0.0;
    double k = 1.0;

    /// Validates tau>0, beta>0, mu>=0 and the existence condition gamma+1-nu>0.
    static PowerLaw derive(double tau, double nu, double beta, double gamma, double mu);
};

/// Daughter-size distribution kappa on [0,1]. Tabulated kernels are the
/// piecewise-linear interpolant of values on uniform nodes; moments integrate
/// that interpolant in closed form (no quadrature error), and construction
/// renormalizes so the first moment is exactly 1 (mass conservation).
class Kernel {
  public:
    enum class Kind { ConstantTwo, Tabulated };

    static Kernel constant_two();
    /// Sample a kernel function on `intervals`+1 uniform nodes.
    static Kernel tabulated(const std::function<double(double)>& kappa, int intervals = 512);
    static Kernel tabulated(std::vector<double> node_values);

    Kind kind() const { return kind_; }
    bool symmetric() const { return symmetric_; }
    double lower_bound() const { return lo_; }
    double upper_bound() const { return hi_; }
    double n0() const { return moment(0.0); }

    /// c_alpha = int z^alpha kappa(z) dz; closed form for kappa==2.
    double moment(double alpha) const;

    /// Pointwise value (linear interpolation for tabulated kernels).
    double operator()(double z) const;

  private:
    Kind kind_ = Kind::ConstantTwo;
    bool symmetric_ = true;
    double lo_ = 2.0, hi_ = 2.0;
    std::vector<double> values_;  // on nodes z_l = l/(m-1)
};

/// Closed-form nonlinearity catalog with exact derivatives.
class Nonlinearity {
  public:
    enum class Family { ExpDecay, ShiftedGaussQuartic, Linear, PrionSigmoid };

    static Nonlinearity exp_decay(double a);                          // a*exp(-x)
    static Nonlinearity shifted_gauss_quartic();                      // 1+exp(-1)-exp(-x^4)
    static Nonlinearity linear(double c);                             // c*x
    static Nonlinearity prion_sigmoid(double a, double b, double s);  // a*(b-exp(-x^2/s))

    double value(double x) const;
    double deriv(double x) const;
    /// Inverse on [0, inf) for increasing families; exact for Linear, bisection otherwise.
    double inverse(double y) const;
    bool increasing() const;
    Family family() const { return family_; }
    std::string describe() const;

  private:
    Family family_ = Family::Linear;
    double a_ = 1.0, b_ = 0.0, s_ = 1.0;
};

/// One component of a T-periodic control: truncated Fourier series or a
/// piecewise-constant table. Periodicity is exact by construction (evaluation
/// reduces t modulo T).
class PeriodicFn {
  public:
    struct Harmonic {
        double cos_coef = 0.0;
        double sin_coef = 0.0;
    };

    static PeriodicFn constant(double c, double period = 1.0);
    static PeriodicFn fourier(double period, double mean, std::vector<Harmonic> harmonics);
    static PeriodicFn table(double period, std::vector<double> values);

    double operator()(double t) const;
    double period() const { return period_; }
    double mean() const;  // the bar average (1/T) int_0^T
    double min_on_period(int samples = 4096) const;

  private:
    bool is_table_ = false;
    double period_ = 1.0;
    double mean_ = 0.0;
    std::vector<Harmonic> harmonics_;
    std::vector<double> table_;
};

/// Periodic control pair (V, R) sharing one period. V must stay positive and
/// R nonnegative on the period.
struct PeriodicControl {
    PeriodicFn V;
    PeriodicFn R;

    PeriodicControl(PeriodicFn v, PeriodicFn r);
    double period() const { return V.period(); }
};

/// Result of the executable structural-assumption checks.
struct AssumptionReport {
    bool pass = false;
    std::vector<double> roots;   // root set (N for as:f, fixed points for psi, x0 for prion)
    double limsup_proxy = 0.0;   // max over [X/2, X]
    std::string detail;
};

/// as:f — the root set {I : f(I)=mu} is finite and limsup at infinity < mu.
/// The limsup proxy is the maximum of f over [X/2, X].
AssumptionReport check_assumption_f(const Nonlinearity& f, double mu, double X = 50.0);

/// as:fandg + as:uniqueequilibrium for the drift+death closure:
/// f(0)>g(0)=0, both increasing, f bounded vs g unbounded (proxied at X), and
/// psi(W)=f(W^{k(p-q)} g^{-1}(W)) has exactly one fixed point with psi'(W)<1.
AssumptionReport check_assumption_fg(const Nonlinearity& f, const Nonlinearity& g, double k,
                                     double p, double q, double X = 50.0);

/// as:fandgprion — unique x0 with f(x0)=g(x0):=delta*mu/(lambda-mu^{k+1} x0) and
/// 0 < f'(x0) < g'(x0).
AssumptionReport check_assumption_fg_prion(const Nonlinearity& f, double lambda, double delta,
                                           double mu, double k);

/// psi(W) = f(W^{k(p-q)} g^{-1}(W)) and its derivative (def:psi).
double psi_drift_death(const Nonlinearity& f, const Nonlinearity& g, double k, double p, double q,
                       double W);
double psi_drift_death_deriv(const Nonlinearity& f, const Nonlinearity& g, double k, double p,
                             double q, double W);

}  // namespace fraglab
