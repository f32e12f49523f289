#pragma once

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "density.hpp"
#include "errors.hpp"
#include "numerics.hpp"
#include "oscillator.hpp"

namespace pulsefield {

/// r = 0 when K·Z ≥ 0 everywhere, otherwise |min K·Z|. The admissible fluxes are (0, ω/r).
[[nodiscard]] inline double flux_offset(const OscillatorModel& m, double K) {
  const double kz_min = coupling_range(m, K).kz_min;
  return kz_min >= 0.0 ? 0.0 : -kz_min;
}

[[nodiscard]] inline double flux_upper_limit(const OscillatorModel& m, double K) {
  const double r = flux_offset(m, K);
  return r > 0.0 ? m.omega() / r : std::numeric_limits<double>::infinity();
}

namespace detail {

inline double w_unchecked(const OscillatorModel& m, double K, double J) {
  if (J == 0.0) return 0.0;
  const double w = m.omega();
  return m.integrate_over_phase([&](double z) { return J / (w + K * z * J); });
}

}  // namespace detail

/// W(J) = ∫_0^{2π} J/(ω + K·Z(θ)·J) dθ; the stationary flux solves W(J) = 1.
[[nodiscard]] inline double normalization_functional(const OscillatorModel& m, double K, double J) {
  if (!(J > 0.0) || !(J < flux_upper_limit(m, K)))
    throw DomainError("flux outside the admissible interval (0, omega/r)");
  return detail::w_unchecked(m, K, J);
}

struct ExistenceResult {
  bool exists = false;
  double r = 0.0;
  double limit = 0.0;     ///< extrapolated lim_{s→r+} ∫ dθ/(K·Z + s); +inf when divergent
  bool infinite = false;
  std::vector<double> sequence;
};

/// Existence of a stationary flux: lim_{s→r+} ∫ dθ/(K·Z(θ) + s) > 1, evaluated on s_k = r + 10^-k.
[[nodiscard]] inline ExistenceResult existence_condition(const OscillatorModel& m, double K) {
  ExistenceResult res;
  res.r = flux_offset(m, K);
  int above = 0;
  bool confirmed = false;
  for (int k = 1; k <= 12; ++k) {
    const double s = res.r + std::pow(10.0, -k);
    const double v = m.integrate_over_phase([&](double z) { return 1.0 / (K * z + s); });
    res.sequence.push_back(v);
    if (!std::isfinite(v) || v > 1e6) {
      res.infinite = true;
      break;
    }
    above = v > 1.0 + 1e-6 ? above + 1 : 0;
    if (above >= 3) confirmed = true;
  }
  if (res.infinite) {
    res.limit = std::numeric_limits<double>::infinity();
    res.exists = true;
    return res;
  }
  const auto est = numerics::extrapolate_limit(res.sequence);
  res.limit = est.value;
  res.infinite = est.diverges && est.value > 0.0;
  res.exists = confirmed || res.infinite;
  return res;
}

struct CouplingBounds {
  double K_lower = 0.0;  ///< −inf when unbounded
  double K_upper = 0.0;
  bool lower_unbounded = false;
  double F_min = 0.0;
  std::vector<double> sequence;
};

/// K_upper = x_hi − x_lo and K_lower = lim_{s→F_min−} ∫ s/(s − F(x)) dx.
[[nodiscard]] inline CouplingBounds coupling_bounds(const OscillatorModel& m) {
  if (!m.has_field()) throw UnsupportedError("coupling_bounds needs an integrate-and-fire model");
  CouplingBounds b;
  b.K_upper = m.x_hi() - m.x_lo();
  double fmin = std::numeric_limits<double>::infinity();
  for (double x : numerics::linspace(m.x_lo(), m.x_hi(), 4097)) fmin = std::min(fmin, m.F(x));
  b.F_min = fmin;
  std::vector<double> seq;
  for (int k = 1; k <= 12; ++k) {
    const double s = fmin * (1.0 - std::pow(10.0, -k));
    const double v = numerics::peaked_integral([&](double x) { return s / (s - m.F(x)); }, m.x_lo(), m.x_hi());
    seq.push_back(v);
    if (!std::isfinite(v) || std::abs(v) > 1e6) break;
  }
  const auto est = numerics::extrapolate_limit(seq);
  b.sequence = est.sequence;
  b.lower_unbounded = est.diverges;
  b.K_lower = est.diverges ? -std::numeric_limits<double>::infinity() : est.value;
  return b;
}

enum class RootMethod { Bisection, Illinois };

/// Asynchronous fixed point ρ*(θ) = J*/(ω + K·Z(θ)·J*).
class StationaryState {
 public:
  StationaryState(OscillatorModel model, double K, double J_star, double r, std::size_t cells)
      : model_(std::move(model)), K_(K), J_star_(J_star), r_(r) {
    rho_star_ = DensityField::from_function([this](double th) { return density(th); }, cells);
    rho_star_.J0 = J_star_;
  }

  [[nodiscard]] const OscillatorModel& model() const { return model_; }
  [[nodiscard]] double K() const { return K_; }
  [[nodiscard]] double J_star() const { return J_star_; }
  [[nodiscard]] double r() const { return r_; }
  [[nodiscard]] bool exists() const { return true; }
  /// Upper end of the open interval (0, ω/r) of admissible fluxes.
  [[nodiscard]] double J_upper() const {
    return r_ > 0.0 ? model_.omega() / r_ : std::numeric_limits<double>::infinity();
  }
  [[nodiscard]] double density(double theta) const {
    return J_star_ / (model_.omega() + K_ * model_.prc(theta) * J_star_);
  }
  [[nodiscard]] const DensityField& rho_star() const { return rho_star_; }
  [[nodiscard]] DensityField sample(std::size_t cells) const {
    auto d = DensityField::from_function([this](double th) { return density(th); }, cells);
    d.J0 = J_star_;
    return d;
  }

 private:
  OscillatorModel model_;
  double K_, J_star_, r_;
  DensityField rho_star_;
};

/// Unique root of W(J) = 1 on the admissible interval. Throws NoStationaryState when the
/// existence condition fails.
[[nodiscard]] inline StationaryState solve_stationary_flux(const OscillatorModel& m, double K, double tol = 1e-10,
                                                           RootMethod method = RootMethod::Bisection,
                                                           std::size_t cells = 2048) {
  const auto ex = existence_condition(m, K);
  if (!ex.exists) {
    std::ostringstream os;
    os << "lim integral of 1/(K Z + s) = " << ex.limit << " does not exceed 1 (K = " << K << ")";
    throw NoStationaryState(os.str(), ex.limit);
  }
  auto f = [&](double J) { return detail::w_unchecked(m, K, J) - 1.0; };
  double hi = 0.0;
  if (ex.r > 0.0) {
    const double cap = m.omega() / ex.r;
    for (int k = 1; k <= 15; ++k) {
      hi = (1.0 - std::pow(10.0, -k)) * cap;
      if (f(hi) > 0.0) break;
    }
  } else {
    hi = m.omega() / two_pi;
    for (int i = 0; i < 200 && f(hi) <= 0.0; ++i) hi *= 2.0;
  }
  if (!(f(hi) > 0.0)) throw NoStationaryState("normalization never reaches 1 inside the admissible interval", ex.limit);
  double J = 0.0;
  if (method == RootMethod::Bisection)
    J = numerics::bisect(f, 0.0, hi, 0.0, 2000);
  else
    J = numerics::illinois(f, 0.0, hi, 0.01 * tol);
  if (!(std::abs(f(J)) < tol)) {
    std::ostringstream os;
    os << "stationary solve did not reach |W - 1| < " << tol;
    throw NoStationaryState(os.str(), ex.limit);
  }
  return StationaryState(m, K, J, ex.r, cells);
}

}  // namespace pulsefield
