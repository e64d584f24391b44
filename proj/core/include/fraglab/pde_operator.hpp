#pragma once

#include <span>
#include <vector>

#include "fraglab/grid.hpp"
#include "fraglab/model.hpp"

namespace fraglab {

enum class TransportOrder { First, SecondVanLeer, SecondMinmod };

/// Discretization of A u = -V d/dx(tau x^nu u) - muR u + F u on a Grid.
///
/// Transport is donor-cell upwind; at first order the flux carries the donor
/// center velocity, which makes the discrete first-moment identity
/// d/dt M1 = tau*V*M_nu - muR*M1 exact up to the outflow cell. The
/// fragmentation matrix satisfies, column by column, both the discrete zeroth
/// moment (c0 * beta_i) and the discrete first moment (x_i * beta_i), so
/// int (F u) x dx = 0 and int (F u) dx = (c0 - 1) int beta(x) u dx hold exactly.
class DiscreteOperator {
  public:
    DiscreteOperator(const Grid& grid, const PowerLaw& pl, const Kernel& kernel);

    /// out = V * transport(u) + frag(u) - muR * u.
    void apply(std::span<const double> u, std::span<double> out, double V = 1.0, double muR = 0.0,
               TransportOrder order = TransportOrder::First) const;

    /// Exact transpose of the first-order apply in the cell-width-weighted inner
    /// product: <A u, phi>_w == <u, A^T phi>_w to machine precision.
    void apply_transpose(std::span<const double> phi, std::span<double> out, double V = 1.0,
                         double muR = 0.0) const;

    void apply_frag(std::span<const double> u, std::span<double> out) const;
    void apply_frag_transpose(std::span<const double> phi, std::span<double> out) const;

    /// Largest dt with dt * max_i(V tau x_i^nu / dx_i) <= 0.9.
    double cfl_dt(double V, TransportOrder order = TransportOrder::First) const;
    /// Largest dt keeping the explicit-Euler diagonal nonnegative (transport CFL
    /// plus fragmentation loss and death).
    double positivity_dt(double V, double muR, TransportOrder order = TransportOrder::First) const;

    const Grid& grid() const { return *grid_; }
    const PowerLaw& powerlaw() const { return pl_; }
    const Kernel& kernel() const { return kernel_; }

  private:
    void transport(std::span<const double> u, std::span<double> out, double V,
                   TransportOrder order) const;

    const Grid* grid_;
    PowerLaw pl_;
    Kernel kernel_;
    std::vector<double> v_center_, v_face_;  // tau x^nu at centers / right faces
    std::vector<double> beta_x_;             // beta x^gamma at centers
    // kappa==2 fast path: column B_ji = (colc_[i] + cold_[i] x_j) * rho_ji with
    // rho_ji = 1 below the diagonal and the partial-cell coverage fraction
    // (x_i - face_i)/w_i at j == i; applied via suffix sums plus a diagonal
    // fix-up. Tabulated kernels store the corrected lower triangle per column.
    bool fast_kernel_ = true;
    std::vector<double> colc_, cold_, diag_frac_;
    std::vector<double> tri_;  // column-compressed lower triangle, B[j][i] at i(i+1)/2+j
};

}  // namespace fraglab
