#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "fraglab/eigenproblem.hpp"
#include "fraglab/grid.hpp"
#include "fraglab/model.hpp"
#include "fraglab/pde_operator.hpp"

namespace fraglab {

/// Discretized density with time stamp; aux_V carries the prion monomer value.
struct SizeState {
    double t = 0.0;
    std::vector<double> u;
    double aux_V = 0.0;
};

enum class ClosureKind { LinearControls, NonlinearDrift, NonlinearDriftDeath, Prion };

/// A fully specified simulation case: closure, coefficients, kernel and the
/// closure-specific feedback data.
struct Scenario {
    ClosureKind kind = ClosureKind::LinearControls;
    PowerLaw pl;
    Kernel kernel = Kernel::constant_two();
    std::optional<PeriodicControl> control;  // linear closure
    std::optional<Nonlinearity> f, g;
    double p = 0.0, q = 0.0;
    double prion_lambda = 0.0, prion_delta = 0.0, prion_V0 = 1.0;
    double Mp_ref = 1.0, Mq_ref = 1.0, M1_ref = 1.0;  // eigen reference moments
    TransportOrder order = TransportOrder::First;
    double r_weight = 3.0;  // weight exponent of H = L^2((x + x^r) dx)

    static Scenario linear(PowerLaw pl, Kernel kernel, PeriodicControl control);
    static Scenario nonlinear_drift(PowerLaw pl, Kernel kernel, Nonlinearity f, double p);
    static Scenario nonlinear_drift_death(PowerLaw pl, Kernel kernel, Nonlinearity f,
                                          Nonlinearity g, double p, double q, double Mp_ref,
                                          double Mq_ref);
    static Scenario prion(PowerLaw pl, Kernel kernel, Nonlinearity f, double p, double lambda,
                          double delta, double V0, double Mp_ref, double M1_ref);
};

struct StepInfo {
    double dt = 0.0;
    double mass = 0.0;        // int u dx after the step
    double velocity = 1.0;    // effective multiplier in front of tau x^nu
    double death = 0.0;       // effective death rate
};

/// Owns the discrete operator for a scenario and advances states explicitly.
/// Feedback moments are evaluated at the current state (explicit lag).
class Simulator {
  public:
    Simulator(Scenario scenario, const Grid& grid);

    /// One explicit Euler step. Throws NumericalError on CFL violation (the
    /// message names the admissible dt) or negativity beyond -1e-14 * max(u).
    StepInfo step(SizeState& state, double dt) const;

    /// Transport CFL bound 0.9 / max(V_eff tau x^nu / dx) at the current state.
    double admissible_dt(const SizeState& state) const;
    double velocity_multiplier(const SizeState& state) const;
    double death_rate(const SizeState& state) const;

    const Scenario& scenario() const { return scenario_; }
    const DiscreteOperator& op() const { return op_; }
    const Grid& grid() const { return *grid_; }

  private:
    Scenario scenario_;
    const Grid* grid_;
    DiscreteOperator op_;
};

struct Observables {
    double M0 = 0.0, M1 = 0.0, Mp = 0.0, Mq = 0.0;
    double norm_H = 0.0;  // (int u^2 (x + x^r) dx)^{1/2}
};

Observables observables(const Grid& grid, std::span<const double> u, double p, double q, double r);

struct ManifoldDiag {
    double eps_p = 0.0;
    double dist_E = 0.0;
    double rho = 0.0;
};

/// eps_p = M_p[u] / (mu^{kp} M_p[U] Q W^{kp}) - 1 against the companion (W, Q);
/// d(u, E) is a golden-section line search over the dilation parameter on
/// [mu W/4, 4 mu W] of || u/rho - U(s; .) ||_{L1(phi dx)} (an upper bound for
/// the true infimum). Requires nu=1 (linear adjoint eigenvector).
ManifoldDiag manifold_diagnostics(const Grid& grid, std::span<const double> u,
                                  const EigenPair& ep, double W, double Q, const PowerLaw& pl,
                                  double p, bool with_distance = true);

/// Same diagnostics parametrized by the dilation s = mu W of U(s; .) directly
/// (the form the run loop uses; works for mu = 0 linear runs where s = W).
ManifoldDiag manifold_diagnostics_dilation(const Grid& grid, std::span<const double> u,
                                           const EigenPair& ep, double s_dilation, double Q,
                                           double k, double p, bool with_distance = true);

/// Quadrature of int phi v H(u/v) dx; cells with u=v=0 contribute zero.
double gre(const Grid& grid, std::span<const double> u, std::span<const double> v,
           std::span<const double> phi, const std::function<double(double)>& H);

struct RunOptions {
    double t_end = 10.0;
    double dt = 0.0;  // 0 = automatic from the CFL/positivity bound
    double cfl_frac = 0.45;
    double sample_dt = 0.1;
    std::vector<double> snapshot_times;
    const EigenPair* eigenpair = nullptr;  // enables rho / eps / dist / gre columns
    bool manifold_diag = false;
    bool compute_dist = false;
    bool gre_diag = false;  // linear closure only
    std::function<double(double)> gre_H;  // default (x-1)^2
};

/// Diagnostics time series; columns absent for a run are filled with NaN.
struct Diagnostics {
    std::vector<double> t, M0, M1, Mp, Mq, norm_H, eps_p, dist_E, rho, gre, mass, velocity;

    size_t rows() const { return t.size(); }
};

/// Repeated explicit steps with observer sampling at a fixed stride;
/// deterministic for fixed inputs. Snapshots (x, u) are taken at the requested
/// times (nearest step).
Diagnostics run(const Scenario& scenario, const Grid& grid, std::vector<double> u0,
                const RunOptions& opt, std::vector<SizeState>* snapshots = nullptr);

/// Initial-condition catalog.
std::vector<double> ic_eigen_dilation(const EigenPair& ep, double dilation, double amplitude);
std::vector<double> ic_lognormal(const Grid& grid, double center, double sigma, double mass = 1.0);
std::vector<double> ic_uniform_block(const Grid& grid, double a, double b, double mass = 1.0);

}  // namespace fraglab
