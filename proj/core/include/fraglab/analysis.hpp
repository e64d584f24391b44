#pragma once

#include <array>
#include <complex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fraglab/eigenproblem.hpp"
#include "fraglab/reduced.hpp"

namespace fraglab {

struct Equilibrium {
    std::array<double, 3> y{};
    int dim = 2;
    double residual = 0.0;
};

struct SteadyStateReport {
    SystemId id = SystemId::WZ;
    std::vector<Equilibrium> equilibria;
    std::vector<double> roots;  // I_inf set (drift), psi fixed points (WQ), Q roots (prion)
    bool unique = false;
    std::string note;
};

/// Nontrivial steady states of the named reduced system.
/// Drift family: every I in N={f=mu} gives (W,Z)=(1, I/(mu^{kp} M_p)).
/// Drift+death: the psi(W)=W root; prion: the f=g crossing.
SteadyStateReport steady_states(SystemId id, const ReducedParams& params, double search_hi = 50.0);

/// The paper's omega function from the two-square lower bound; f(0)=0, max f(-2)=2.
double lemma32_f(double x);
/// Sharp constant omega(alpha) = inf_beta ((beta+1)^2+(beta+alpha)^2)/(beta^2+1),
/// evaluated at both critical points (the closed-form minimizer switches branch
/// at alpha = -1).
double lemma32_omega(double alpha);

struct LyapunovEval {
    double L = 0.0;          // 2 k mu G(W) + (a+^2 + a-^2) F(Z)
    double D = 0.0;          // omega (mu^2 (W-1)^2 + a+^2 p (mu-f_p)^2)
    double dLdt = 0.0;       // chain rule through the WZ rhs
    double two_squares = 0.0;  // the exact dissipation, = -dLdt
    double omega = 0.0;
};

/// Lyapunov data for the WZ drift system at (W, Z); requires p != 1.
LyapunovEval lyapunov(double W, double Z, const ReducedParams& params);

enum class StabilityClass {
    StableNode,
    StableFocus,
    UnstableNode,
    UnstableFocus,
    Saddle,
    HopfMarginal,
    DegenerateNode
};

std::string to_string(StabilityClass c);

struct StabilityReport {
    int dim = 2;
    std::array<std::array<double, 3>, 3> jacobian{};
    double trace = 0.0;
    double det = 0.0;
    double minor_sum = 0.0;  // 3x3 only
    std::array<std::complex<double>, 3> eigenvalues{};
    StabilityClass cls = StabilityClass::StableNode;
    double fd_max_rel_err = 0.0;
    bool instability_condition = false;  // drift+death trace condition
    double det_via_psi = 0.0;            // (1/k) W^{kq+1} Q g' (1 - psi'(W))
};

/// Analytic Jacobian (cross-checked against central finite differences; a
/// mismatch beyond 1e-5 relative throws, guarding transcription bugs) plus
/// trace/determinant classification.
StabilityReport local_stability(SystemId id, std::span<const double> eq,
                                const ReducedParams& params,
                                const PeriodicControl* control = nullptr);

/// Routh-Hurwitz for the cubic char. polynomial l^3 - T l^2 + M l - D.
bool routh_hurwitz_stable(double T, double M, double D);
/// Eigenvalues of a 3x3 system straight from its invariants.
std::array<std::complex<double>, 3> eigenvalues_from_invariants(double T, double M, double D);

struct HopfReport {
    Equilibrium eq;                           // (V,W,Q) steady state, p-independent
    double p0 = 0.0, p1 = 0.0;
    bool p0_found = false;
    double psi0 = 0.0, psi_at_p1 = 0.0, psi_second = 0.0;
    bool paper_small_mu_condition = false;    // mu <= (k + 1/mu) delta
    double a_prime = 0.0, b_at_p0 = 0.0, c_at_p0 = 0.0;  // transversality certificate
    std::vector<std::pair<double, double>> psi_samples;
    std::string note;
};

/// psi(p) = M(p) T(p) - D scan for the prion system with p the bifurcation
/// parameter; p0 located by bisection to p_tol.
HopfReport hopf_scan(const ReducedParams& params, int samples = 64, double p_tol = 1e-6);

struct CycleReport {
    bool detected = false;
    double period = 0.0;
    double period_drift = 0.0;     // relative, over the last 3 cycles
    double amplitude_drift = 0.0;  // relative, worst component
    int crossings = 0;
    double section_value = 0.0;
    std::vector<double> amplitude;  // per component, last full cycle
    std::vector<double> crossing_times;
    std::string note;
};

/// Poincare section at component `section_comp` == section_value, positive
/// crossing direction with a hysteresis band (fraction of the post-burn-in
/// amplitude). Detected iff period drift < period_tol and amplitude drift
/// < amp_tol over the last 3 cycles.
CycleReport detect_limit_cycle(const Trajectory& traj, int section_comp, double section_value,
                               double burn_in, double hysteresis_frac = 0.01,
                               double period_tol = 0.01, double amp_tol = 0.02);

struct FloquetReport {
    double lambda_F = 0.0;
    double lambda_of_means = 0.0;  // Lambda(Vbar, Rbar)
    double mean_of_lambda = 0.0;   // bar Lambda(V,R)
    double W_periodic_start = 0.0;
    double shooting_residual = 0.0;
    std::vector<double> orbit_t, orbit_W, orbit_cumlam;  // cumlam = int_0^t Lambda(W,R)
    double uf_periodicity_gap = -1.0;  // L1 gap UF(T,.) vs UF(0,.); -1 if not materialized
};

/// Periodic W by shooting on the period map of dW = (Lambda(W,0)/k)(V - W),
/// then Lambda_F = (1/T) int Lambda(W,R). Requires nu=1 or (nu=0, gamma=1).
/// When `ep` is given (nu=1), the Floquet eigenvector is materialized to
/// measure its T-periodicity gap.
FloquetReport floquet_compare(const PowerLaw& pl, const PeriodicControl& control,
                              const EigenPair* ep = nullptr);

/// t -> U_F(t, .) on the eigenpair grid, from a floquet_compare report.
class FloquetEigenvector {
  public:
    FloquetEigenvector(const FloquetReport& report, const EigenPair& ep, const PowerLaw& pl);
    std::vector<double> profile(double t) const;

  private:
    const EigenPair* ep_;
    PowerLaw pl_;
    double lambda_F_, period_;
    num::Pchip W_of_t_, cumlam_of_t_;
};

/// Least-squares exponential rate: fits log(values) = c - a t on the samples
/// with values above floor_frac * max; returns a.
double fit_decay_rate(std::span<const double> t, std::span<const double> values,
                      double floor_frac = 1e-4);

}  // namespace fraglab
