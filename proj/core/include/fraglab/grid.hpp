#pragma once

#include <span>
#include <vector>

#include "fraglab/model.hpp"

namespace fraglab {

/// Cell-centered finite-volume grid on [0, x_max]: faces, centers, widths.
class Grid {
  public:
    enum class Kind { Uniform, Geometric };

    static Grid uniform(int n, double x_max);
    /// Faces 0, x_first, x_first*rho, ..., x_max (log-spaced above x_first).
    static Grid geometric(int n, double x_first, double x_max);

    /// Default truncation point: for nu=1 and kappa==2, solve the closed-form
    /// tail mass < 1e-10; otherwise 20*(tau/beta)^{1/gamma}.
    static double default_x_max(const PowerLaw& pl, const Kernel& kernel);

    Kind kind() const { return kind_; }
    int size() const { return static_cast<int>(centers_.size()); }
    double x_max() const { return faces_.back(); }
    std::span<const double> centers() const { return centers_; }
    std::span<const double> widths() const { return widths_; }
    std::span<const double> faces() const { return faces_; }

    double integrate(std::span<const double> u) const;
    double moment(std::span<const double> u, double alpha) const;

  private:
    Kind kind_ = Kind::Uniform;
    std::vector<double> faces_, centers_, widths_;
};

}  // namespace fraglab
