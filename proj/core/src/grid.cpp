#include "fraglab/grid.hpp"

#include <cmath>

#include "fraglab/errors.hpp"

namespace fraglab {

namespace {

void finish(Grid::Kind, std::vector<double>& faces, std::vector<double>& centers,
            std::vector<double>& widths) {
    const size_t n = faces.size() - 1;
    centers.resize(n);
    widths.resize(n);
    for (size_t i = 0; i < n; ++i) {
        centers[i] = 0.5 * (faces[i] + faces[i + 1]);
        widths[i] = faces[i + 1] - faces[i];
        if (!(widths[i] > 0.0)) throw ConstraintError("Grid: faces must be strictly increasing");
    }
}

}  // namespace

Grid Grid::uniform(int n, double x_max) {
    if (n < 2 || !(x_max > 0.0)) throw ConstraintError("Grid::uniform: need n >= 2 and x_max > 0");
    Grid g;
    g.kind_ = Kind::Uniform;
    g.faces_.resize(static_cast<size_t>(n) + 1);
    for (int j = 0; j <= n; ++j) g.faces_[static_cast<size_t>(j)] = x_max * static_cast<double>(j) / n;
    finish(g.kind_, g.faces_, g.centers_, g.widths_);
    return g;
}

Grid Grid::geometric(int n, double x_first, double x_max) {
    if (n < 2 || !(x_first > 0.0) || !(x_max > x_first))
        throw ConstraintError("Grid::geometric: need n >= 2 and 0 < x_first < x_max");
    Grid g;
    g.kind_ = Kind::Geometric;
    g.faces_.resize(static_cast<size_t>(n) + 1);
    g.faces_[0] = 0.0;
    const double rho = std::pow(x_max / x_first, 1.0 / (n - 1));
    for (int j = 1; j <= n; ++j)
        g.faces_[static_cast<size_t>(j)] = x_first * std::pow(rho, static_cast<double>(j - 1));
    g.faces_.back() = x_max;
    finish(g.kind_, g.faces_, g.centers_, g.widths_);
    return g;
}

double Grid::default_x_max(const PowerLaw& pl, const Kernel& kernel) {
    if (pl.nu == 1.0 && kernel.kind() == Kernel::Kind::ConstantTwo) {
        // tail of U = C exp(-s x^gamma): solve Q(1/gamma, s x^gamma) = 1e-10 via the
        // asymptotic Gamma(a,z) ~ z^{a-1} e^{-z} fixed point
        const double s = pl.beta / (pl.tau * pl.gamma);
        const double a = 1.0 / pl.gamma;
        double z = 25.0;
        for (int it = 0; it < 60; ++it)
            z = std::max(2.0, (a - 1.0) * std::log(z) - std::lgamma(a) + 10.0 * std::log(10.0));
        z = std::max(z, 10.0);
        return std::pow(z / s, 1.0 / pl.gamma);
    }
    return 20.0 * std::pow(pl.tau / pl.beta, 1.0 / pl.gamma);
}

double Grid::integrate(std::span<const double> u) const {
    double s = 0.0;
    for (size_t i = 0; i < u.size(); ++i) s += u[i] * widths_[i];
    return s;
}

double Grid::moment(std::span<const double> u, double alpha) const {
    double s = 0.0;
    for (size_t i = 0; i < u.size(); ++i) s += std::pow(centers_[i], alpha) * u[i] * widths_[i];
    return s;
}

}  // namespace fraglab
