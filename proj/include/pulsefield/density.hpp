#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "numerics.hpp"

namespace pulsefield {

/// Density ρ sampled on N+1 uniform nodes θ_i = 2πi/N, plus the boundary flux J0 at time t.
/// Node 0 and node N are distinct unknowns; the continuum state is not assumed periodic.
struct DensityField {
  std::vector<double> rho;
  double J0 = 0.0;
  double t = 0.0;

  DensityField() = default;
  explicit DensityField(std::vector<double> values, double j0 = 0.0, double time = 0.0)
      : rho(std::move(values)), J0(j0), t(time) {
    if (rho.size() < 3) throw std::invalid_argument("DensityField needs at least 2 cells");
  }

  template <class Fn>
  [[nodiscard]] static DensityField from_function(const Fn& f, std::size_t cells) {
    std::vector<double> v(cells + 1);
    const double h = numerics::two_pi / static_cast<double>(cells);
    for (std::size_t i = 0; i <= cells; ++i) v[i] = f(i == cells ? numerics::two_pi : h * static_cast<double>(i));
    return DensityField(std::move(v));
  }

  [[nodiscard]] std::size_t cells() const { return rho.size() - 1; }
  [[nodiscard]] double dtheta() const { return numerics::two_pi / static_cast<double>(cells()); }
  [[nodiscard]] double theta(std::size_t i) const {
    return i == cells() ? numerics::two_pi : dtheta() * static_cast<double>(i);
  }

  /// Δθ·Σ_{i=1..N} ρ_i: the quantity conserved exactly by the flux-form scheme.
  [[nodiscard]] double cell_mass() const {
    double s = 0.0;
    for (std::size_t i = 1; i < rho.size(); ++i) s += rho[i];
    return s * dtheta();
  }

  /// Trapezoid mass of the piecewise-linear interpolant through all nodes.
  [[nodiscard]] double trapezoid_mass() const {
    double s = 0.5 * (rho.front() + rho.back());
    for (std::size_t i = 1; i + 1 < rho.size(); ++i) s += rho[i];
    return s * dtheta();
  }

  [[nodiscard]] double min() const { return *std::min_element(rho.begin(), rho.end()); }
  [[nodiscard]] double max() const { return *std::max_element(rho.begin(), rho.end()); }
};

}  // namespace pulsefield
