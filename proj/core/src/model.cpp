#include "fraglab/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fraglab/numerics.hpp"

namespace fraglab {

PowerLaw PowerLaw::derive(double tau, double nu, double beta, double gamma, double mu) {
    if (!(tau > 0.0)) throw ConstraintError("PowerLaw: tau must be > 0");
    if (!(beta > 0.0)) throw ConstraintError("PowerLaw: beta must be > 0");
    if (!(mu >= 0.0)) throw ConstraintError("PowerLaw: mu must be >= 0");
    const double denom = gamma + 1.0 - nu;
    if (!(denom > 0.0)) {
        std::ostringstream os;
        os << "PowerLaw: existence condition gamma+1-nu > 0 violated (gamma=" << gamma
           << ", nu=" << nu << ", gamma+1-nu=" << denom << ")";
        throw ConstraintError(os.str());
    }
    PowerLaw p;
    p.tau = tau;
    p.nu = nu;
    p.beta = beta;
    p.gamma = gamma;
    p.mu = mu;
    p.k = 1.0 / denom;
    return p;
}

Kernel Kernel::constant_two() {
    Kernel k;
    k.kind_ = Kind::ConstantTwo;
    k.symmetric_ = true;
    k.lo_ = k.hi_ = 2.0;
    return k;
}

Kernel Kernel::tabulated(const std::function<double(double)>& kappa, int intervals) {
    if (intervals < 2) intervals = 2;
    if (intervals % 2) ++intervals;
    std::vector<double> vals(static_cast<size_t>(intervals) + 1);
    for (int l = 0; l <= intervals; ++l)
        vals[static_cast<size_t>(l)] = kappa(static_cast<double>(l) / intervals);
    return tabulated(std::move(vals));
}

namespace {

// exact moment of the piecewise-linear interpolant of `vals` on uniform nodes
double piecewise_linear_moment(const std::vector<double>& vals, double alpha) {
    const size_t m = vals.size();
    const double h = 1.0 / static_cast<double>(m - 1);
    double s = 0.0;
    for (size_t l = 0; l + 1 < m; ++l) {
        const double a = static_cast<double>(l) * h, b = a + h;
        const double slope = (vals[l + 1] - vals[l]) / h;
        const double c0 = vals[l] - slope * a;
        s += c0 * (std::pow(b, alpha + 1.0) - std::pow(a, alpha + 1.0)) / (alpha + 1.0) +
             slope * (std::pow(b, alpha + 2.0) - std::pow(a, alpha + 2.0)) / (alpha + 2.0);
    }
    return s;
}

}  // namespace

Kernel Kernel::tabulated(std::vector<double> node_values) {
    const size_t m = node_values.size();
    if (m < 2) throw ConstraintError("Kernel: tabulated data needs at least two nodes");
    Kernel k;
    k.kind_ = Kind::Tabulated;
    k.values_ = std::move(node_values);
    for (double v : k.values_)
        if (!(v >= 0.0)) throw ConstraintError("Kernel: kappa must be nonnegative on [0,1]");
    const double m1 = piecewise_linear_moment(k.values_, 1.0);
    if (!(m1 > 0.0)) throw ConstraintError("Kernel: first moment must be positive");
    for (double& v : k.values_) v /= m1;
    k.lo_ = *std::min_element(k.values_.begin(), k.values_.end());
    k.hi_ = *std::max_element(k.values_.begin(), k.values_.end());
    if (!(k.lo_ > 0.0))
        throw ConstraintError("Kernel: bounded kernels must satisfy 0 < kappa_lo (as in the bounded-kernel assumption)");
    k.symmetric_ = true;
    for (size_t l = 0; l < m; ++l) {
        if (std::abs(k.values_[l] - k.values_[m - 1 - l]) > 1e-12 * k.hi_) {
            k.symmetric_ = false;
            break;
        }
    }
    if (!(k.n0() > 1.0)) throw ConstraintError("Kernel: mean fragment count n0 must exceed 1");
    return k;
}

double Kernel::moment(double alpha) const {
    if (alpha < 0.0) throw std::domain_error("Kernel::moment: alpha must be >= 0");
    if (kind_ == Kind::ConstantTwo) return 2.0 / (alpha + 1.0);
    return piecewise_linear_moment(values_, alpha);
}

double Kernel::operator()(double z) const {
    if (kind_ == Kind::ConstantTwo) return 2.0;
    if (z <= 0.0) return values_.front();
    if (z >= 1.0) return values_.back();
    const double pos = z * static_cast<double>(values_.size() - 1);
    const size_t l = static_cast<size_t>(pos);
    const double t = pos - static_cast<double>(l);
    return values_[l] * (1.0 - t) + values_[l + 1] * t;
}

Nonlinearity Nonlinearity::exp_decay(double a) {
    Nonlinearity f;
    f.family_ = Family::ExpDecay;
    f.a_ = a;
    return f;
}

Nonlinearity Nonlinearity::shifted_gauss_quartic() {
    Nonlinearity f;
    f.family_ = Family::ShiftedGaussQuartic;
    return f;
}

Nonlinearity Nonlinearity::linear(double c) {
    Nonlinearity f;
    f.family_ = Family::Linear;
    f.a_ = c;
    return f;
}

Nonlinearity Nonlinearity::prion_sigmoid(double a, double b, double s) {
    Nonlinearity f;
    f.family_ = Family::PrionSigmoid;
    f.a_ = a;
    f.b_ = b;
    f.s_ = s;
    return f;
}

namespace {
inline double safe_exp(double x) { return std::exp(std::max(x, -700.0)); }
}  // namespace

double Nonlinearity::value(double x) const {
    switch (family_) {
        case Family::ExpDecay: return a_ * safe_exp(-x);
        case Family::ShiftedGaussQuartic: return 1.0 + std::exp(-1.0) - safe_exp(-x * x * x * x);
        case Family::Linear: return a_ * x;
        case Family::PrionSigmoid: return a_ * (b_ - safe_exp(-x * x / s_));
    }
    return 0.0;
}

double Nonlinearity::deriv(double x) const {
    switch (family_) {
        case Family::ExpDecay: return -a_ * safe_exp(-x);
        case Family::ShiftedGaussQuartic: return 4.0 * x * x * x * safe_exp(-x * x * x * x);
        case Family::Linear: return a_;
        case Family::PrionSigmoid: return a_ * (2.0 * x / s_) * safe_exp(-x * x / s_);
    }
    return 0.0;
}

bool Nonlinearity::increasing() const { return family_ != Family::ExpDecay; }

double Nonlinearity::inverse(double y) const {
    if (family_ == Family::Linear) return y / a_;
    if (!increasing()) throw ConstraintError("Nonlinearity::inverse: family is not increasing");
    // expand an upper bracket, then bisect
    double hi = 1.0;
    int guard = 0;
    while (value(hi) < y && guard++ < 2048) hi *= 2.0;
    if (value(hi) < y) throw NumericalError("Nonlinearity::inverse: value out of range");
    if (value(0.0) > y) throw NumericalError("Nonlinearity::inverse: value below f(0)");
    return num::bisect([&](double x) { return value(x) - y; }, 0.0, hi, 1e-14);
}

std::string Nonlinearity::describe() const {
    std::ostringstream os;
    switch (family_) {
        case Family::ExpDecay: os << a_ << "*exp(-x)"; break;
        case Family::ShiftedGaussQuartic: os << "1+exp(-1)-exp(-x^4)"; break;
        case Family::Linear: os << a_ << "*x"; break;
        case Family::PrionSigmoid: os << a_ << "*(" << b_ << "-exp(-x^2/" << s_ << "))"; break;
    }
    return os.str();
}

PeriodicFn PeriodicFn::constant(double c, double period) {
    PeriodicFn f;
    f.period_ = period;
    f.mean_ = c;
    return f;
}

PeriodicFn PeriodicFn::fourier(double period, double mean, std::vector<Harmonic> harmonics) {
    if (!(period > 0.0)) throw ConstraintError("PeriodicFn: period must be > 0");
    PeriodicFn f;
    f.period_ = period;
    f.mean_ = mean;
    f.harmonics_ = std::move(harmonics);
    return f;
}

PeriodicFn PeriodicFn::table(double period, std::vector<double> values) {
    if (!(period > 0.0)) throw ConstraintError("PeriodicFn: period must be > 0");
    if (values.empty()) throw ConstraintError("PeriodicFn: table must be nonempty");
    PeriodicFn f;
    f.is_table_ = true;
    f.period_ = period;
    f.table_ = std::move(values);
    return f;
}

double PeriodicFn::operator()(double t) const {
    double s = std::fmod(t, period_);
    if (s < 0.0) s += period_;
    if (is_table_) {
        const auto m = table_.size();
        auto idx = static_cast<size_t>(s / period_ * static_cast<double>(m));
        if (idx >= m) idx = m - 1;
        return table_[idx];
    }
    double v = mean_;
    const double w = 2.0 * M_PI / period_;
    for (size_t j = 0; j < harmonics_.size(); ++j) {
        const double arg = w * static_cast<double>(j + 1) * s;
        v += harmonics_[j].cos_coef * std::cos(arg) + harmonics_[j].sin_coef * std::sin(arg);
    }
    return v;
}

double PeriodicFn::mean() const {
    if (!is_table_) return mean_;  // harmonics average to zero exactly
    double s = 0.0;
    for (double v : table_) s += v;
    return s / static_cast<double>(table_.size());
}

double PeriodicFn::min_on_period(int samples) const {
    double m = (*this)(0.0);
    for (int i = 1; i < samples; ++i)
        m = std::min(m, (*this)(period_ * static_cast<double>(i) / samples));
    return m;
}

PeriodicControl::PeriodicControl(PeriodicFn v, PeriodicFn r) : V(std::move(v)), R(std::move(r)) {
    if (std::abs(V.period() - R.period()) > 1e-12 * V.period())
        throw ConstraintError("PeriodicControl: V and R must share one period");
    if (!(V.min_on_period() > 0.0)) throw ConstraintError("PeriodicControl: V must be positive on [0,T]");
    if (R.min_on_period() < 0.0) throw ConstraintError("PeriodicControl: R must be nonnegative on [0,T]");
}

AssumptionReport check_assumption_f(const Nonlinearity& f, double mu, double X) {
    AssumptionReport rep;
    const int samples = 4000;
    // degenerate plateau detection: f == mu on a whole stretch means N is not finite
    int flat = 0;
    for (int i = 0; i <= samples; ++i) {
        const double x = X * static_cast<double>(i) / samples;
        if (std::abs(f.value(x) - mu) <= 1e-13 * std::max(1.0, std::abs(mu))) ++flat;
    }
    if (flat > samples / 100) {
        rep.pass = false;
        rep.detail = "root set not finite: f-mu vanishes on a plateau";
        return rep;
    }
    rep.roots = num::find_roots_scan([&](double x) { return f.value(x) - mu; }, 0.0, X, samples, 1e-6);
    double sup = 0.0;
    for (int i = 0; i <= 512; ++i) sup = std::max(sup, f.value(X / 2.0 + (X / 2.0) * i / 512.0));
    rep.limsup_proxy = sup;
    rep.pass = sup < mu;
    rep.detail = rep.pass ? "ok" : "limsup proxy on [X/2,X] is not below mu";
    return rep;
}

AssumptionReport check_assumption_fg(const Nonlinearity& f, const Nonlinearity& g, double k,
                                     double p, double q, double X) {
    AssumptionReport rep;
    if (!(f.value(0.0) > 0.0) || std::abs(g.value(0.0)) > 1e-14) {
        rep.detail = "need f(0) > g(0) = 0";
        return rep;
    }
    if (!f.increasing() || !g.increasing()) {
        rep.detail = "f and g must be increasing";
        return rep;
    }
    if (!(f.value(X) < g.value(X))) {
        rep.detail = "need f < g at the right end (f bounded, g unbounded)";
        return rep;
    }
    // unique fixed point of psi with psi' < 1 there
    const double wlo = 1e-6, whi = std::max(1.0, 2.0 * f.value(X));
    auto h = [&](double W) { return psi_drift_death(f, g, k, p, q, W) - W; };
    rep.roots = num::find_roots_scan(h, wlo, whi, 4000, 1e-8);
    if (rep.roots.size() != 1) {
        rep.detail = "psi(W)=W does not have exactly one root in the scan window";
        return rep;
    }
    const double Winf = rep.roots.front();
    const double psip = psi_drift_death_deriv(f, g, k, p, q, Winf);
    if (!(psip < 1.0)) {
        rep.detail = "psi'(W_inf) must be < 1";
        return rep;
    }
    rep.pass = true;
    rep.detail = "ok";
    return rep;
}

AssumptionReport check_assumption_fg_prion(const Nonlinearity& f, double lambda, double delta,
                                           double mu, double k) {
    AssumptionReport rep;
    const double x_hi = lambda / std::pow(mu, k + 1.0);
    auto g = [&](double x) { return delta * mu / (lambda - std::pow(mu, k + 1.0) * x); };
    auto gd = [&](double x) {
        const double d = lambda - std::pow(mu, k + 1.0) * x;
        return delta * mu * std::pow(mu, k + 1.0) / (d * d);
    };
    rep.roots = num::find_roots_scan([&](double x) { return f.value(x) - g(x); }, 0.0,
                                     x_hi * (1.0 - 1e-9), 4000, 1e-8);
    if (rep.roots.size() != 1) {
        rep.detail = "f and the prion g must cross exactly once on [0, lambda/mu^{k+1})";
        return rep;
    }
    const double x0 = rep.roots.front();
    if (!(f.deriv(x0) > 0.0 && f.deriv(x0) < gd(x0))) {
        rep.detail = "need 0 < f'(x0) < g'(x0)";
        return rep;
    }
    rep.pass = true;
    rep.detail = "ok";
    return rep;
}

double psi_drift_death(const Nonlinearity& f, const Nonlinearity& g, double k, double p, double q,
                       double W) {
    return f.value(std::pow(W, k * (p - q)) * g.inverse(W));
}

double psi_drift_death_deriv(const Nonlinearity& f, const Nonlinearity& g, double k, double p,
                             double q, double W) {
    const double ginv = g.inverse(W);
    const double wkpq = std::pow(W, k * (p - q));
    const double ginv_d = 1.0 / g.deriv(ginv);
    const double inner = k * (p - q) * std::pow(W, k * (p - q) - 1.0) * ginv + wkpq * ginv_d;
    return f.deriv(wkpq * ginv) * inner;
}

}  // namespace fraglab
