#pragma once

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fraglab/model.hpp"
#include "fraglab/numerics.hpp"

namespace fraglab {

/// Finite-dimensional systems reduced from the size-structured dynamics.
///  WOde        scalar dilation ODE  dW = (Lambda(W,0)/k)(V2 - V1 W)
///  WZ          (W, Z) drift system in the Z = W^{kp} Q variable
///  WZPerturbed WZ with the eps(t) hook inside f_p
///  WQDrift     (W, Q) drift system (dQ = mu Q (W-1))
///  WQ          (W, Q) drift+death system (dQ = Q (W - g(W^{kq} Q)))
///  WQPerturbed WQ with eps_p/eps_q hooks
///  VWQ         prion monomer-polymer triple
///  UP          closed zeroth/first-moment pair for nu=0, gamma=1
enum class SystemId { WOde, WZ, WZPerturbed, WQDrift, WQ, WQPerturbed, VWQ, UP };

int system_dim(SystemId id);
std::string system_name(SystemId id);
std::vector<std::string> component_names(SystemId id);

struct ReducedState {
    SystemId id = SystemId::WZ;
    double t = 0.0;
    std::array<double, 3> y{};  // first system_dim entries are live
};

struct ReducedParams {
    PowerLaw pl;
    std::optional<Nonlinearity> f;
    std::optional<Nonlinearity> g;
    double p = 0.0, q = 0.0;
    double prion_lambda = 0.0, prion_delta = 0.0;
    double Mp = 1.0, Mq = 1.0;    // eigen scaling constants M_p[U], M_q[U]
    double lambda10 = 0.0;        // Lambda(1,0), used by WOde and the moment ODEs
    PeriodicFn V1 = PeriodicFn::constant(1.0);  // WOde only

    // perturbation hooks; empty means identically zero
    std::function<double(double)> eps_p;
    std::function<double(double)> eps_q;

    /// f_p(I) = f(I mu^{kp} M_p) (the drift closure's rescaled nonlinearity).
    double f_p(double I) const;
    double f_p_deriv(double I) const;
};

/// Exact algebraic right-hand side of the named system.
void reduced_rhs(const ReducedState& s, const ReducedParams& params,
                 const PeriodicControl* control, std::span<double> out);

struct Trajectory {
    SystemId id = SystemId::WZ;
    int dim = 2;
    std::vector<double> t;
    std::vector<std::array<double, 3>> y;

    std::vector<double> component(int c) const;
};

struct IntegrateOptions {
    double t_end = 10.0;
    double dt = 1e-3;
    int stride = 1;                 // store every stride-th step
    double rhs_sup_limit = 1e3;     // step-halving trigger
    bool check_positive = true;
};

/// Fixed-step RK4 with local step halving when the rhs sup-norm spikes.
/// Throws NumericalError (reporting the last valid state) on positivity loss
/// or non-finite values.
Trajectory integrate(SystemId id, std::span<const double> y0, const ReducedParams& params,
                     const IntegrateOptions& opt, const PeriodicControl* control = nullptr);

/// Closed-form Bernoulli solution of dW = (tau W / k)(V2 - V1 W); running
/// integrals by composite Simpson at resolution matching RK4's global order.
double bernoulli_W(double W0, const num::Fn& V1, const num::Fn& V2, double t, const PowerLaw& pl,
                   int steps = 0);

struct MomentSeries {
    std::vector<double> t;
    std::vector<double> value;  // script-M_alpha(t) = M_alpha[U] W^{k alpha} exp(int Lambda)
    std::vector<double> rhs;    // alpha Lam a_al V M_{al+nu-1} + (1-al) Lam b_al M_{al+gamma} - mu R M_al
};

/// Moment dynamics along a dilation trajectory W(t). eigen_moment(alpha) must
/// return M_alpha of the normalized eigenvector.
MomentSeries moments_reduced(const Trajectory& w_traj, const PeriodicFn& V, const PeriodicFn& R,
                             double alpha, const PowerLaw& pl, double lambda10,
                             const std::function<double(double)>& eigen_moment);

}  // namespace fraglab
