#include "fraglab/numerics.hpp"

#include <algorithm>
#include <cmath>

#include "fraglab/errors.hpp"

namespace fraglab::num {

double bisect(const Fn& f, double lo, double hi, double tol, int max_iter) {
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if (flo * fhi > 0.0) throw NumericalError("bisect: interval does not bracket a root");
    for (int it = 0; it < max_iter && hi - lo > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if (flo * fm < 0.0) {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    return 0.5 * (lo + hi);
}

std::vector<double> find_roots_scan(const Fn& f, double lo, double hi, int samples,
                                    double merge_tol, double root_tol) {
    std::vector<double> roots;
    const double h = (hi - lo) / samples;
    double xa = lo, fa = f(xa);
    for (int i = 1; i <= samples; ++i) {
        const double xb = lo + i * h;
        const double fb = f(xb);
        if (fa == 0.0) {
            roots.push_back(xa);
        } else if (fa * fb < 0.0) {
            roots.push_back(bisect(f, xa, xb, root_tol));
        }
        xa = xb;
        fa = fb;
    }
    if (fa == 0.0) roots.push_back(xa);
    std::sort(roots.begin(), roots.end());
    std::vector<double> merged;
    for (double r : roots) {
        if (merged.empty() || r - merged.back() > merge_tol) merged.push_back(r);
    }
    return merged;
}

double simpson(const Fn& f, double a, double b, int n) {
    if (n < 2) n = 2;
    if (n % 2) ++n;
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

namespace {

double adaptive_simpson_rec(const Fn& f, double a, double b, double fa, double fm, double fb,
                            double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const Fn& f, double a, double b, double abs_tol, int max_depth) {
    if (a == b) return 0.0;
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, abs_tol, max_depth);
}

std::vector<double> cumulative_simpson(const Fn& f, double t0, double dt, int steps) {
    std::vector<double> out(steps + 1);
    out[0] = 0.0;
    double fl = f(t0);
    for (int i = 0; i < steps; ++i) {
        const double tl = t0 + i * dt;
        const double fm = f(tl + 0.5 * dt);
        const double fr = f(tl + dt);
        out[i + 1] = out[i] + dt / 6.0 * (fl + 4.0 * fm + fr);
        fl = fr;
    }
    return out;
}

Pchip::Pchip(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw NumericalError("Pchip: need at least two nodes");
    m_.assign(n, 0.0);
    std::vector<double> d(n - 1), h(n - 1);
    for (size_t i = 0; i + 1 < n; ++i) {
        h[i] = x_[i + 1] - x_[i];
        if (h[i] <= 0.0) throw NumericalError("Pchip: nodes must be strictly increasing");
        d[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    // Fritsch-Carlson: harmonic-mean interior slopes, clipped one-sided ends
    m_[0] = d[0];
    m_[n - 1] = d[n - 2];
    for (size_t i = 1; i + 1 < n; ++i) {
        if (d[i - 1] * d[i] <= 0.0) {
            m_[i] = 0.0;
        } else {
            const double w1 = 2.0 * h[i] + h[i - 1];
            const double w2 = h[i] + 2.0 * h[i - 1];
            m_[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
        }
    }
    for (size_t i = 0; i + 1 < n; ++i) {
        if (d[i] == 0.0) {
            m_[i] = m_[i + 1] = 0.0;
        } else {
            const double a = m_[i] / d[i], b = m_[i + 1] / d[i];
            const double s = a * a + b * b;
            if (s > 9.0) {
                const double t = 3.0 / std::sqrt(s);
                m_[i] = t * a * d[i];
                m_[i + 1] = t * b * d[i];
            }
        }
    }
}

double Pchip::operator()(double x) const {
    if (x_.empty() || x < x_.front() || x > x_.back()) return 0.0;
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    size_t i = static_cast<size_t>(std::distance(x_.begin(), it));
    if (i == 0) i = 1;
    if (i >= x_.size()) i = x_.size() - 1;
    --i;
    const double h = x_[i + 1] - x_[i];
    const double t = (x - x_[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    return h00 * y_[i] + h10 * h * m_[i] + h01 * y_[i + 1] + h11 * h * m_[i + 1];
}

std::array<std::complex<double>, 3> solve_cubic(double a, double b, double c) {
    // depressed form t^3 + p t + q with x = t - a/3
    const double p = b - a * a / 3.0;
    const double q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    const double shift = -a / 3.0;
    std::array<std::complex<double>, 3> r;
    const double disc = q * q / 4.0 + p * p * p / 27.0;
    if (disc > 0.0) {
        const double s = std::sqrt(disc);
        const double u = std::cbrt(-q / 2.0 + s);
        const double v = std::cbrt(-q / 2.0 - s);
        const double re = -(u + v) / 2.0 + shift;
        const double im = std::sqrt(3.0) / 2.0 * (u - v);
        r[0] = {u + v + shift, 0.0};
        r[1] = {re, im};
        r[2] = {re, -im};
    } else {
        // three real roots (trigonometric form)
        const double rho = std::sqrt(std::max(-p * p * p / 27.0, 0.0));
        const double theta = std::atan2(std::sqrt(std::max(-disc, 0.0)), -q / 2.0);
        const double mag = 2.0 * std::cbrt(rho);
        for (int k = 0; k < 3; ++k)
            r[static_cast<size_t>(k)] = {mag * std::cos((theta + 2.0 * M_PI * k) / 3.0) + shift, 0.0};
    }
    return r;
}

double golden_min(const Fn& f, double a, double b, double tol, int max_iter) {
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < max_iter && (b - a) > tol; ++it) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        }
    }
    return 0.5 * (a + b);
}

std::pair<double, double> linear_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw NumericalError("linear_fit: need >= 2 points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    const double slope = (n * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / n;
    return {intercept, slope};
}

}  // namespace fraglab::num
