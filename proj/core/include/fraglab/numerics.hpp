#pragma once

#include <array>
#include <complex>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace fraglab::num {

using Fn = std::function<double(double)>;

/// Bisection on a bracketing interval; f(lo) and f(hi) must have opposite signs.
double bisect(const Fn& f, double lo, double hi, double tol = 1e-12, int max_iter = 200);

/// Sign-change scan on [lo, hi] followed by bisection on each bracket.
/// Roots closer than merge_tol are merged. Exact zeros at sample points count.
std::vector<double> find_roots_scan(const Fn& f, double lo, double hi, int samples = 2000,
                                    double merge_tol = 1e-6, double root_tol = 1e-12);

/// Composite Simpson with n subintervals (n rounded up to even).
double simpson(const Fn& f, double a, double b, int n);

/// Adaptive Simpson to an absolute tolerance.
double adaptive_simpson(const Fn& f, double a, double b, double abs_tol = 1e-10, int max_depth = 40);

/// Cumulative Simpson along a uniform step grid: result[i] = integral from t0 to t0+i*dt.
/// Uses one Simpson pane (with midpoint evaluation) per step, so the global order is 4.
std::vector<double> cumulative_simpson(const Fn& f, double t0, double dt, int steps);

/// Monotone piecewise-cubic interpolation (Fritsch-Carlson). Evaluates to 0 outside the data range.
class Pchip {
  public:
    Pchip() = default;
    Pchip(std::vector<double> x, std::vector<double> y);
    double operator()(double x) const;

  private:
    std::vector<double> x_, y_, m_;  // nodes, values, node derivatives
};

/// Roots of x^3 + a x^2 + b x + c, exact at multiple-root boundaries within
/// floating-point limits. Real parts are what classification consumes.
std::array<std::complex<double>, 3> solve_cubic(double a, double b, double c);

/// Golden-section minimization of a unimodal function on [a, b]; returns argmin.
double golden_min(const Fn& f, double a, double b, double tol = 1e-8, int max_iter = 200);

/// Least squares line y = a + b x; returns {a, b}.
std::pair<double, double> linear_fit(std::span<const double> x, std::span<const double> y);

}  // namespace fraglab::num
