#pragma once

#include <span>
#include <vector>

#include "fraglab/grid.hpp"
#include "fraglab/model.hpp"
#include "fraglab/pde_operator.hpp"

namespace fraglab {

/// Perron triple on a grid: eigenvalue, direct eigenvector (int U = 1) and
/// adjoint eigenvector (int phi U = 1), with L1 operator residuals.
struct EigenPair {
    double lambda = 0.0;
    double lambda_adjoint = 0.0;
    std::vector<double> U;
    std::vector<double> phi;
    double residual = 0.0;
    double residual_phi = 0.0;
    Grid grid;

    double moment(double alpha) const { return grid.moment(U, alpha); }
};

struct PerronOptions {
    double tol = 1e-8;                 // eigenvalue drift per sweep
    double sweep_time = 1.0;           // time horizon of one renormalized sweep
    double cfl_frac = 0.45;            // dt = cfl_frac / max rate
    double extraction_dt_frac = 0.1;   // final sweep runs at dt * frac to tame the log bias
    int max_sweeps = 3000;
    TransportOrder order = TransportOrder::First;
    bool with_adjoint = true;
};

/// Power iteration on the explicit time semigroup of the operator assembled by
/// the pde module (V=1, R=0). The eigenvalue is extracted as log(growth)/dt
/// over the final sweep. Throws NumericalError on non-convergence.
EigenPair solve_perron(const PowerLaw& pl, const Kernel& kernel, const Grid& grid,
                       const PerronOptions& opt = {});
EigenPair solve_perron(const DiscreteOperator& op, const PerronOptions& opt = {});

/// Adjoint eigenvector by power iteration on the exact discrete transpose,
/// normalized so that int phi U = 1. lambda_out receives the adjoint log-growth.
std::vector<double> solve_adjoint(const DiscreteOperator& op, std::span<const double> U,
                                  const PerronOptions& opt = {}, double* lambda_out = nullptr,
                                  double* residual_out = nullptr);

/// Explicit eigenvector U(x) = C exp(-beta/(tau*gamma) x^gamma) for nu=1 and
/// kappa==2, sampled on the grid. Throws ConstraintError otherwise.
std::vector<double> closed_form_U(const PowerLaw& pl, const Kernel& kernel, const Grid& grid);

/// Normalization constant C and moments M_alpha of the closed-form eigenvector
/// via Gamma-function identities (nu=1, kappa==2 only).
double closed_form_normalization(const PowerLaw& pl);
double closed_form_moment(const PowerLaw& pl, double alpha);

/// Lambda(V,R) = V^{k gamma} Lambda(1,0) - R mu.
double lambda_vr(double lambda0, double V, double R, const PowerLaw& pl);

/// Dilation U(V; x) = V^{-k} U(1; V^{-k} x) by monotone cubic interpolation.
/// Throws NumericalError if the dilated mass deviates from 1 by more than
/// mass_tol (support escaped the grid).
std::vector<double> rescale_eigenvector(std::span<const double> U, double V, double k,
                                        const Grid& grid, double mass_tol = 1e-3);

}  // namespace fraglab
