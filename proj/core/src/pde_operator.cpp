#include "fraglab/pde_operator.hpp"

#include <algorithm>
#include <cmath>

#include "fraglab/errors.hpp"

namespace fraglab {

DiscreteOperator::DiscreteOperator(const Grid& grid, const PowerLaw& pl, const Kernel& kernel)
    : grid_(&grid), pl_(pl), kernel_(kernel) {
    const auto x = grid.centers();
    const auto w = grid.widths();
    const auto f = grid.faces();
    const size_t n = x.size();
    v_center_.resize(n);
    v_face_.resize(n);
    beta_x_.resize(n);
    for (size_t i = 0; i < n; ++i) {
        v_center_[i] = pl.tau * std::pow(x[i], pl.nu);
        v_face_[i] = pl.tau * std::pow(f[i + 1], pl.nu);
        beta_x_[i] = pl.beta * std::pow(x[i], pl.gamma);
    }

    // prefix moments of the quadrature up to and including cell i
    std::vector<double> P(n), Q1(n), Q2(n);
    double p = 0, q1 = 0, q2 = 0;
    for (size_t i = 0; i < n; ++i) {
        p += w[i];
        q1 += x[i] * w[i];
        q2 += x[i] * x[i] * w[i];
        P[i] = p;
        Q1[i] = q1;
        Q2[i] = q2;
    }

    const double c0 = kernel.moment(0.0);
    fast_kernel_ = kernel.kind() == Kernel::Kind::ConstantTwo;
    diag_frac_.resize(n);
    for (size_t i = 0; i < n; ++i) diag_frac_[i] = (x[i] - f[i]) / w[i];  // daughter range hits x_i
    if (fast_kernel_) {
        colc_.assign(n, 0.0);
        cold_.assign(n, 0.0);
        for (size_t i = 0; i < n; ++i) {
            const double t0 = c0 * beta_x_[i];    // target zeroth moment of the column
            const double t1 = x[i] * beta_x_[i];  // target first moment (mass conservation)
            const double r = diag_frac_[i];
            // column moments of the shape rho (1 below the diagonal, r at it)
            const double m0 = (i ? P[i - 1] : 0.0) + r * w[i];
            const double m1 = (i ? Q1[i - 1] : 0.0) + r * x[i] * w[i];
            const double m2 = (i ? Q2[i - 1] : 0.0) + r * x[i] * x[i] * w[i];
            if (i == 0) {
                colc_[0] = t1 / m1;
                continue;
            }
            const double det = m0 * m2 - m1 * m1;
            double c = (t0 * m2 - t1 * m1) / det;
            double d = (t1 * m0 - t0 * m1) / det;
            if (c + d * x[0] < 0.0 || c + d * x[i] < 0.0) {  // keep the matrix nonnegative
                c = t1 / m1;
                d = 0.0;
            }
            colc_[i] = c;
            cold_[i] = d;
        }
    } else {
        tri_.assign(n * (n + 1) / 2, 0.0);
        for (size_t i = 0; i < n; ++i) {
            double* col = &tri_[i * (i + 1) / 2];
            double m0 = 0, m1 = 0, m2 = 0;
            for (size_t j = 0; j <= i; ++j) {
                const double rho = j == i ? diag_frac_[i] : 1.0;
                const double z = j == i ? 0.5 * (f[i] + x[i]) / x[i] : x[j] / x[i];
                col[j] = beta_x_[i] / x[i] * kernel_(z) * rho;
                m0 += col[j] * w[j];
                m1 += col[j] * x[j] * w[j];
                m2 += col[j] * x[j] * x[j] * w[j];
            }
            const double t0 = c0 * beta_x_[i];
            const double t1 = x[i] * beta_x_[i];
            bool corrected = false;
            if (i > 0) {
                const double det = m0 * m2 - m1 * m1;
                if (std::abs(det) > 1e-300) {
                    const double c = (t0 * m2 - t1 * m1) / det;
                    const double d = (t1 * m0 - t0 * m1) / det;
                    if (c + d * x[0] >= 0.0 && c + d * x[i] >= 0.0) {
                        for (size_t j = 0; j <= i; ++j) col[j] *= c + d * x[j];
                        corrected = true;
                    }
                }
            }
            if (!corrected) {
                const double s = t1 / m1;  // mass-only rescale
                for (size_t j = 0; j <= i; ++j) col[j] *= s;
            }
        }
    }
}

void DiscreteOperator::transport(std::span<const double> u, std::span<double> out, double V,
                                 TransportOrder order) const {
    const auto x = grid_->centers();
    const auto w = grid_->widths();
    const auto f = grid_->faces();
    const size_t n = u.size();
    thread_local std::vector<double> flux;
    flux.resize(n);
    if (order == TransportOrder::First) {
        for (size_t i = 0; i < n; ++i) flux[i] = V * v_center_[i] * u[i];
    } else {
        // MUSCL: limited per-length slopes, face velocity, reconstruction at the right face
        const bool inflow_dirichlet = pl_.nu == 0.0;  // v(0) > 0 only for nu == 0
        double a_prev = 0.0;
        for (size_t i = 0; i < n; ++i) {
            const double b = (i + 1 < n) ? (u[i + 1] - u[i]) / (x[i + 1] - x[i]) : a_prev;
            double a = (i == 0) ? (inflow_dirichlet ? u[0] / x[0] : b) : a_prev;
            double s = 0.0;
            const double ab = a * b;
            if (ab > 0.0) {
                if (order == TransportOrder::SecondVanLeer) {
                    s = 2.0 * ab / (a + b);
                } else {
                    s = (a > 0.0 ? 1.0 : -1.0) * std::min(std::abs(a), std::abs(b));
                }
            }
            flux[i] = V * v_face_[i] * (u[i] + s * (f[i + 1] - x[i]));
            a_prev = b;
        }
    }
    out[0] = -flux[0] / w[0];
    for (size_t j = 1; j < n; ++j) out[j] = (flux[j - 1] - flux[j]) / w[j];
}

void DiscreteOperator::apply_frag(std::span<const double> u, std::span<double> out) const {
    const auto x = grid_->centers();
    const auto w = grid_->widths();
    const size_t n = u.size();
    if (fast_kernel_) {
        double S = 0.0, T = 0.0;
        for (size_t j = n; j-- > 0;) {
            S += colc_[j] * u[j] * w[j];
            T += cold_[j] * u[j] * w[j];
            out[j] = S + x[j] * T +
                     (diag_frac_[j] - 1.0) * (colc_[j] + cold_[j] * x[j]) * u[j] * w[j] -
                     beta_x_[j] * u[j];
        }
    } else {
        for (size_t j = 0; j < n; ++j) out[j] = -beta_x_[j] * u[j];
        for (size_t i = 0; i < n; ++i) {
            const double* col = &tri_[i * (i + 1) / 2];
            const double uw = u[i] * w[i];
            if (uw == 0.0) continue;
            for (size_t j = 0; j <= i; ++j) out[j] += col[j] * uw;
        }
    }
}

void DiscreteOperator::apply_frag_transpose(std::span<const double> phi, std::span<double> out) const {
    const auto x = grid_->centers();
    const auto w = grid_->widths();
    const size_t n = phi.size();
    if (fast_kernel_) {
        double pf = 0.0, pxf = 0.0;
        for (size_t i = 0; i < n; ++i) {
            pf += phi[i] * w[i];
            pxf += x[i] * phi[i] * w[i];
            const double diag = (diag_frac_[i] - 1.0) * phi[i] * w[i];
            out[i] = colc_[i] * (pf + diag) + cold_[i] * (pxf + x[i] * diag) -
                     beta_x_[i] * phi[i];
        }
    } else {
        for (size_t i = 0; i < n; ++i) {
            const double* col = &tri_[i * (i + 1) / 2];
            double s = 0.0;
            for (size_t j = 0; j <= i; ++j) s += col[j] * phi[j] * w[j];
            out[i] = s - beta_x_[i] * phi[i];
        }
    }
}

void DiscreteOperator::apply(std::span<const double> u, std::span<double> out, double V, double muR,
                             TransportOrder order) const {
    const size_t n = u.size();
    thread_local std::vector<double> frag;
    frag.resize(n);
    apply_frag(u, frag);
    transport(u, out, V, order);
    for (size_t j = 0; j < n; ++j) out[j] += frag[j] - muR * u[j];
}

void DiscreteOperator::apply_transpose(std::span<const double> phi, std::span<double> out, double V,
                                       double muR) const {
    const auto w = grid_->widths();
    const size_t n = phi.size();
    thread_local std::vector<double> frag;
    frag.resize(n);
    apply_frag_transpose(phi, frag);
    for (size_t i = 0; i < n; ++i) {
        const double up = (i + 1 < n) ? phi[i + 1] : 0.0;
        out[i] = V * v_center_[i] * (up - phi[i]) / w[i] + frag[i] - muR * phi[i];
    }
}

double DiscreteOperator::cfl_dt(double V, TransportOrder order) const {
    const auto w = grid_->widths();
    double rate = 0.0;
    for (size_t i = 0; i < w.size(); ++i) {
        double v = v_center_[i];
        if (order != TransportOrder::First) v = std::max(v, v_face_[i]);
        rate = std::max(rate, V * v / w[i]);
    }
    return rate > 0.0 ? 0.9 / rate : std::numeric_limits<double>::infinity();
}

double DiscreteOperator::positivity_dt(double V, double muR, TransportOrder order) const {
    const auto w = grid_->widths();
    double rate = 0.0;
    for (size_t i = 0; i < w.size(); ++i) {
        double v = v_center_[i];
        if (order != TransportOrder::First) v = std::max(v, v_face_[i]);
        rate = std::max(rate, V * v / w[i] + beta_x_[i] + muR);
    }
    return rate > 0.0 ? 0.9 / rate : std::numeric_limits<double>::infinity();
}

}  // namespace fraglab
