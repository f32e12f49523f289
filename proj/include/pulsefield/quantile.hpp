#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "density.hpp"
#include "errors.hpp"
#include "numerics.hpp"

namespace pulsefield {

/// Index-space view of a density. The density is read as the piecewise-linear interpolant
/// of its nodes, normalized to unit mass, so P, Q and q are all available in closed form.
class QuantileProfile {
 public:
  explicit QuantileProfile(const DensityField& d) : h_(d.dtheta()) {
    const std::size_t n = d.rho.size();
    for (double v : d.rho)
      if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("density must be finite and non-negative");
    const double mass = d.trapezoid_mass();
    if (!(mass > 0.0)) throw DomainError("density has zero mass");
    rho_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      rho_[i] = d.rho[i] / mass;
      if (rho_[i] <= 0.0) degenerate_ = true;
    }
    P_.assign(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) P_[i] = P_[i - 1] + 0.5 * h_ * (rho_[i - 1] + rho_[i]);
    const double total = P_.back();
    for (auto& p : P_) p /= total;
    P_.back() = 1.0;
    rho_max_ = *std::max_element(rho_.begin(), rho_.end());
  }

  [[nodiscard]] bool degenerate() const { return degenerate_; }
  [[nodiscard]] std::size_t segments() const { return rho_.size() - 1; }
  [[nodiscard]] const std::vector<double>& knots() const { return P_; }
  [[nodiscard]] const std::vector<double>& normalized_density() const { return rho_; }
  [[nodiscard]] double dtheta() const { return h_; }

  /// Cumulative density P(θ).
  [[nodiscard]] double P(double theta) const {
    const std::size_t i = segment_of_theta(theta);
    const double u = theta - h_ * static_cast<double>(i);
    return P_[i] + rho_[i] * u + 0.5 * slope(i) * u * u;
  }

  /// Quantile function Q(φ) = inf{θ : P(θ) ≥ φ}.
  [[nodiscard]] double Q(double phi) const {
    check_phi(phi);
    if (phi <= 0.0) return first_positive_theta();
    if (phi >= 1.0) return numerics::two_pi;
    const std::size_t i = segment_of_phi(phi);
    const double d = phi - P_[i];
    const double ra = rho_[i];
    const double disc = std::max(0.0, ra * ra + 2.0 * slope(i) * d);
    const double denom = ra + std::sqrt(disc);
    const double u = denom > 0.0 ? 2.0 * d / denom : 0.0;
    return std::min(numerics::two_pi, h_ * static_cast<double>(i) + std::clamp(u, 0.0, h_));
  }

  /// Quantile density q(φ) = 1/ρ(Q(φ)).
  [[nodiscard]] double q(double phi) const {
    check_phi(phi);
    const std::size_t i = segment_of_phi(phi);
    const double a = A(i, phi);
    return a > 0.0 ? 1.0 / std::sqrt(a) : std::numeric_limits<double>::infinity();
  }

  /// min_φ q(φ) = 1/max ρ.
  [[nodiscard]] double q_min() const { return 1.0 / rho_max_; }

  /// ρ(Q(φ))² on segment i, linear in φ.
  [[nodiscard]] double A(std::size_t i, double phi) const {
    return std::max(0.0, rho_[i] * rho_[i] + 2.0 * slope(i) * (phi - P_[i]));
  }

  [[nodiscard]] double slope(std::size_t i) const { return (rho_[i + 1] - rho_[i]) / h_; }

  [[nodiscard]] std::size_t segment_of_phi(double phi) const {
    if (phi <= 0.0) return first_nonempty();
    auto it = std::lower_bound(P_.begin(), P_.end(), phi);
    std::size_t i = it == P_.begin() ? 0 : static_cast<std::size_t>(it - P_.begin()) - 1;
    return std::min(i, segments() - 1);
  }

  struct Sample {
    double phi, Q, q;
  };

  /// (φ, Q, q) on n uniform index values in [0, 1].
  [[nodiscard]] std::vector<Sample> sample(std::size_t n) const {
    std::vector<Sample> out;
    out.reserve(n);
    for (double phi : numerics::linspace(0.0, 1.0, n)) out.push_back({phi, Q(phi), q(phi)});
    return out;
  }

 private:
  static void check_phi(double phi) {
    if (!(phi >= 0.0 && phi <= 1.0)) throw DomainError("index outside [0, 1]");
  }

  std::size_t segment_of_theta(double theta) const {
    if (!(theta >= 0.0 && theta <= numerics::two_pi)) throw DomainError("phase outside [0, 2pi]");
    auto i = static_cast<std::size_t>(theta / h_);
    return std::min(i, segments() - 1);
  }

  std::size_t first_nonempty() const {
    for (std::size_t i = 0; i < segments(); ++i)
      if (P_[i + 1] > 0.0) return i;
    return 0;
  }

  double first_positive_theta() const {
    const std::size_t i = first_nonempty();
    return rho_[i] > 0.0 ? h_ * static_cast<double>(i) : h_ * static_cast<double>(i + 1);
  }

  double h_;
  std::vector<double> rho_, P_;
  double rho_max_ = 0.0;
  bool degenerate_ = false;
};

[[nodiscard]] inline QuantileProfile quantile_transform(const DensityField& d) { return QuantileProfile(d); }

namespace detail {

/// Walks the union of both knot sets and calls fn(i, j, u, w) for every piece [u, w] on which
/// both profiles are a single segment.
template <class Fn>
void for_merged_pieces(const QuantileProfile& a, const QuantileProfile& b, Fn&& fn) {
  const auto& Pa = a.knots();
  const auto& Pb = b.knots();
  std::size_t i = 0, j = 0;
  double phi = 0.0;
  while (i < a.segments() && j < b.segments()) {
    const double next = std::min(Pa[i + 1], Pb[j + 1]);
    if (next > phi) {
      fn(i, j, phi, next);
      phi = next;
    }
    if (Pa[i + 1] <= phi) ++i;
    if (Pb[j + 1] <= phi) ++j;
  }
}

inline double inv_sqrt_integral(double Au, double Aw, double u, double w) {
  const double den = std::sqrt(Au) + std::sqrt(Aw);
  return 2.0 * (w - u) / den;
}

inline void require_positive(const QuantileProfile& p) {
  if (p.degenerate()) throw QuantileDegenerate("density vanishes somewhere; quantile density is unbounded");
}

}  // namespace detail

/// V = ∫_0^1 |q − q_ref| dφ, integrated exactly on the merged knot set.
[[nodiscard]] inline double lyapunov_tv(const QuantileProfile& a, const QuantileProfile& b) {
  detail::require_positive(a);
  detail::require_positive(b);
  double total = 0.0;
  detail::for_merged_pieces(a, b, [&](std::size_t i, std::size_t j, double u, double w) {
    // A_a − A_b is linear in φ, so |q_a − q_b| changes sign at most once per piece.
    const double du = a.A(i, u) - b.A(j, u);
    const double dw = a.A(i, w) - b.A(j, w);
    auto piece = [&](double lo, double hi) {
      const double qa = detail::inv_sqrt_integral(a.A(i, lo), a.A(i, hi), lo, hi);
      const double qb = detail::inv_sqrt_integral(b.A(j, lo), b.A(j, hi), lo, hi);
      return std::abs(qa - qb);
    };
    if ((du > 0.0 && dw < 0.0) || (du < 0.0 && dw > 0.0)) {
      const double c = u + (w - u) * du / (du - dw);
      total += piece(u, c) + piece(c, w);
    } else {
      total += piece(u, w);
    }
  });
  return total;
}

[[nodiscard]] inline double lyapunov_tv(const DensityField& state, const DensityField& reference) {
  return lyapunov_tv(QuantileProfile(state), QuantileProfile(reference));
}

/// L² distance ∫_0^1 (q − q_ref)² dφ between quantile densities.
[[nodiscard]] inline double quantile_l2(const QuantileProfile& a, const QuantileProfile& b) {
  detail::require_positive(a);
  detail::require_positive(b);
  double total = 0.0;
  detail::for_merged_pieces(a, b, [&](std::size_t i, std::size_t j, double u, double w) {
    total += numerics::gauss_legendre8(
        [&](double phi) {
          const double d = 1.0 / std::sqrt(a.A(i, phi)) - 1.0 / std::sqrt(b.A(j, phi));
          return d * d;
        },
        u, w);
  });
  return total;
}

/// ∫_0^{2π} |ρ − ρ_ref| dθ for two normalized piecewise-linear densities on the same grid.
[[nodiscard]] inline double density_l1(const DensityField& a, const DensityField& b) {
  if (a.rho.size() != b.rho.size()) throw std::invalid_argument("density_l1 needs matching grids");
  const double ma = a.trapezoid_mass(), mb = b.trapezoid_mass();
  const double h = a.dtheta();
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < a.rho.size(); ++i) {
    const double d0 = a.rho[i] / ma - b.rho[i] / mb;
    const double d1 = a.rho[i + 1] / ma - b.rho[i + 1] / mb;
    if ((d0 > 0.0 && d1 < 0.0) || (d0 < 0.0 && d1 > 0.0))
      total += 0.5 * h * (d0 * d0 + d1 * d1) / (std::abs(d0) + std::abs(d1));
    else
      total += 0.5 * h * std::abs(d0 + d1);
  }
  return total;
}

/// Finite-population distance between two sorted phase configurations (last entry 2π):
/// the ℓ¹ distance between their consecutive phase gaps.
[[nodiscard]] inline double discrete_lyapunov(const std::vector<double>& theta, const std::vector<double>& theta_ref) {
  const std::size_t n = theta.size();
  if (n == 0 || theta_ref.size() != n) throw std::invalid_argument("discrete_lyapunov needs equal non-empty vectors");
  auto check = [](const std::vector<double>& v) {
    for (std::size_t k = 1; k < v.size(); ++k)
      if (v[k] < v[k - 1]) throw std::invalid_argument("phase vector must be sorted ascending");
    if (std::abs(v.back() - numerics::two_pi) > 1e-12) throw std::invalid_argument("last phase must be 2pi");
    if (v.front() < 0.0) throw std::invalid_argument("phases must be non-negative");
  };
  check(theta);
  check(theta_ref);
  double v = 0.0, prev = 0.0, prev_ref = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    v += std::abs((theta[k] - prev) - (theta_ref[k] - prev_ref));
    prev = theta[k];
    prev_ref = theta_ref[k];
  }
  return v;
}

/// θ_k = Q(k/N), k = 1..N.
[[nodiscard]] inline std::vector<double> n_quantiles(const QuantileProfile& p, std::size_t N) {
  if (N == 0) throw std::invalid_argument("n_quantiles needs N >= 1");
  std::vector<double> out(N);
  for (std::size_t k = 1; k <= N; ++k) out[k - 1] = p.Q(static_cast<double>(k) / static_cast<double>(N));
  out.back() = numerics::two_pi;
  return out;
}

}  // namespace pulsefield
