#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace pulsefield::numerics {

inline constexpr double two_pi = 6.283185307179586476925286766559;
inline constexpr double pi = 3.141592653589793238462643383279;

/// Uniformly spaced points, both endpoints included.
[[nodiscard]] inline std::vector<double> linspace(double a, double b, std::size_t n) {
  if (n < 2) throw std::invalid_argument("linspace needs at least two points");
  std::vector<double> out(n);
  const double h = (b - a) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = a + h * static_cast<double>(i);
  out.back() = b;
  return out;
}

namespace detail {

template <class Fn>
double simpson_recurse(const Fn& f, double a, double b, double fa, double fm, double fb, double whole,
                       double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol || std::abs(delta) <= 1e-14 * std::abs(left + right) ||
      !(m > a && b > m)) return left + right + delta / 15.0;
  return simpson_recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson quadrature of f over [a, b] to an absolute tolerance.
/// The interval is pre-split into `pieces` panels so narrow features are not skipped.
template <class Fn>
[[nodiscard]] double adaptive_simpson(const Fn& f, double a, double b, double abs_tol = 1e-12,
                                      int max_depth = 50, int pieces = 8) {
  if (a == b) return 0.0;
  double total = 0.0;
  const double h = (b - a) / pieces;
  for (int k = 0; k < pieces; ++k) {
    const double lo = a + h * k;
    const double hi = (k + 1 == pieces) ? b : a + h * (k + 1);
    const double fa = f(lo);
    const double fb = f(hi);
    const double fm = f(0.5 * (lo + hi));
    const double whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
    total += detail::simpson_recurse(f, lo, hi, fa, fm, fb, whole, abs_tol / pieces, max_depth);
  }
  return total;
}

/// Fixed-order Gauss-Legendre rule (8 nodes) on [a, b].
template <class Fn>
[[nodiscard]] double gauss_legendre8(const Fn& f, double a, double b) {
  static constexpr std::array<double, 4> x{0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                           0.9602898564975363};
  static constexpr std::array<double, 4> w{0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                           0.1012285362903763};
  const double c = 0.5 * (a + b);
  const double r = 0.5 * (b - a);
  double s = 0.0;
  for (std::size_t i = 0; i < 4; ++i) s += w[i] * (f(c - r * x[i]) + f(c + r * x[i]));
  return s * r;
}

/// Integral of a function with one sharp (possibly integrable-singular) peak. The peak is
/// located by sampling, the surrounding panel is graded geometrically toward it and every
/// piece gets a fixed 8-point Gauss rule, so no step depends on noisy error estimates.
template <class Fn>
[[nodiscard]] double peaked_integral(const Fn& f, double a, double b, int pieces = 16, int levels = 64) {
  if (a == b) return 0.0;
  const int samples = pieces * 32;
  const double hs = (b - a) / samples;
  auto mag = [&](double x) {
    const double v = std::abs(f(x));
    return std::isfinite(v) ? v : std::numeric_limits<double>::max();
  };
  int best = 0;
  double best_val = -1.0;
  for (int i = 0; i <= samples; ++i) {
    const double v = mag(i == samples ? b : a + hs * i);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  double p = best == samples ? b : a + hs * best;
  if (best > 0 && best < samples) {
    // Golden-section refinement of the peak between the neighbouring samples.
    double lo = p - hs, hi = p + hs;
    constexpr double g = 0.6180339887498949;
    double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
    double fc = mag(c), fd = mag(d);
    for (int it = 0; it < 80 && hi - lo > 1e-16 * std::max(1.0, std::abs(p)); ++it) {
      if (fc > fd) {
        hi = d;
        d = c;
        fd = fc;
        c = hi - g * (hi - lo);
        fc = mag(c);
      } else {
        lo = c;
        c = d;
        fc = fd;
        d = lo + g * (hi - lo);
        fd = mag(d);
      }
    }
    p = 0.5 * (lo + hi);
    if (mag(p) < best_val) p = a + hs * best;
  }
  auto graded = [&](double from, double to) {
    double total = 0.0;
    const double w = to - from;
    for (int j = 0; j < levels; ++j) {
      const double u0 = from + w * std::ldexp(1.0, -(j + 1));
      const double u1 = from + w * std::ldexp(1.0, -j);
      total += gauss_legendre8(f, std::min(u0, u1), std::max(u0, u1)) * (w > 0 ? 1.0 : -1.0);
    }
    return total;
  };
  const double hp = (b - a) / pieces;
  double total = 0.0;
  for (int k = 0; k < pieces; ++k) {
    const double lo = a + hp * k;
    const double hi = (k + 1 == pieces) ? b : a + hp * (k + 1);
    if (p >= lo && (p < hi || (k + 1 == pieces && p == hi))) {
      if (p > lo) total += -graded(p, lo);
      if (p < hi) total += graded(p, hi);
    } else if (std::abs(p - lo) < hp || std::abs(p - hi) < hp) {
      // Neighbouring panels still see the peak's tail: grade them as well.
      const double near = std::abs(p - lo) < std::abs(p - hi) ? lo : hi;
      const double far = near == lo ? hi : lo;
      total += near == lo ? graded(near, far) : -graded(near, far);
    } else {
      total += gauss_legendre8(f, lo, 0.5 * (lo + hi)) + gauss_legendre8(f, 0.5 * (lo + hi), hi);
    }
  }
  return total;
}

/// Root of a continuous function with a sign change on [a, b]. Iterates until the bracket
/// is narrower than `x_tol` or cannot be split any further.
template <class Fn>
[[nodiscard]] double bisect(const Fn& f, double a, double b, double x_tol = 0.0, int max_iter = 400) {
  double fa = f(a);
  const double fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa > 0.0) == (fb > 0.0)) throw std::domain_error("bisect: root not bracketed");
  for (int it = 0; it < max_iter; ++it) {
    const double m = 0.5 * (a + b);
    if (!(m > std::min(a, b) && m < std::max(a, b)) || std::abs(b - a) <= x_tol) return m;
    const double fm = f(m);
    if (fm == 0.0) return m;
    if ((fm > 0.0) == (fa > 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

/// Illinois-modified regula falsi on a bracket; an independent cross-check for bisection.
template <class Fn>
[[nodiscard]] double illinois(const Fn& f, double a, double b, double f_tol, int max_iter = 500) {
  double fa = f(a);
  double fb = f(b);
  if ((fa > 0.0) == (fb > 0.0)) throw std::domain_error("illinois: root not bracketed");
  int side = 0;
  double c = a;
  for (int it = 0; it < max_iter; ++it) {
    c = (a * fb - b * fa) / (fb - fa);
    const double fc = f(c);
    if (std::abs(fc) <= f_tol || c == a || c == b) return c;
    if ((fc > 0.0) == (fb > 0.0)) {
      b = c;
      fb = fc;
      if (side == -1) fa *= 0.5;
      side = -1;
    } else {
      a = c;
      fa = fc;
      if (side == 1) fb *= 0.5;
      side = 1;
    }
  }
  return c;
}

/// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson slopes).
class Pchip {
 public:
  Pchip() = default;

  Pchip(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw std::invalid_argument("Pchip needs matching arrays of length >= 2");
    for (std::size_t i = 1; i < n; ++i)
      if (!(x_[i] > x_[i - 1])) throw std::invalid_argument("Pchip abscissae must be strictly increasing");
    uniform_ = true;
    const double h0 = x_[1] - x_[0];
    for (std::size_t i = 1; i + 1 < n; ++i)
      if (std::abs((x_[i + 1] - x_[i]) - h0) > 1e-12 * std::abs(h0)) uniform_ = false;
    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      h[i] = x_[i + 1] - x_[i];
      delta[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    d_.assign(n, 0.0);
    if (n == 2) {
      d_[0] = d_[1] = delta[0];
      return;
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (delta[i - 1] * delta[i] > 0.0) {
        const double w1 = 2.0 * h[i] + h[i - 1];
        const double w2 = h[i] + 2.0 * h[i - 1];
        d_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
      }
    }
    d_[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d_[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  }

  [[nodiscard]] double operator()(double t) const { return eval(t, 0); }
  [[nodiscard]] double derivative(double t) const { return eval(t, 1); }
  [[nodiscard]] double second_derivative(double t) const { return eval(t, 2); }

  [[nodiscard]] double front() const { return x_.front(); }
  [[nodiscard]] double back() const { return x_.back(); }
  [[nodiscard]] const std::vector<double>& knots() const { return x_; }
  [[nodiscard]] const std::vector<double>& values() const { return y_; }

  /// Index i of the knot interval [x_i, x_{i+1}] containing t (clamped).
  [[nodiscard]] std::size_t interval(double t) const {
    const std::size_t n = x_.size();
    if (t <= x_.front()) return 0;
    if (t >= x_.back()) return n - 2;
    if (uniform_) {
      auto i = static_cast<std::size_t>((t - x_.front()) / (x_[1] - x_[0]));
      i = std::min(i, n - 2);
      while (i > 0 && t < x_[i]) --i;
      while (i + 2 < n && t >= x_[i + 1]) ++i;
      return i;
    }
    auto it = std::upper_bound(x_.begin(), x_.end(), t);
    return static_cast<std::size_t>(it - x_.begin()) - 1;
  }

 private:
  static double end_slope(double h0, double h1, double d0, double d1) {
    double d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (d * d0 <= 0.0) return 0.0;
    if (d0 * d1 <= 0.0 && std::abs(d) > std::abs(3.0 * d0)) return 3.0 * d0;
    return d;
  }

  double eval(double t, int order) const {
    const std::size_t i = interval(t);
    const double h = x_[i + 1] - x_[i];
    const double s = (t - x_[i]) / h;
    const double y0 = y_[i], y1 = y_[i + 1];
    const double m0 = d_[i] * h, m1 = d_[i + 1] * h;
    if (order == 0) {
      const double s2 = s * s, s3 = s2 * s;
      return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * m0 + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * m1;
    }
    if (order == 1) {
      const double s2 = s * s;
      return ((6 * s2 - 6 * s) * y0 + (3 * s2 - 4 * s + 1) * m0 + (-6 * s2 + 6 * s) * y1 + (3 * s2 - 2 * s) * m1) / h;
    }
    return ((12 * s - 6) * y0 + (6 * s - 4) * m0 + (-12 * s + 6) * y1 + (6 * s - 2) * m1) / (h * h);
  }

  std::vector<double> x_, y_, d_;
  bool uniform_ = false;
};

/// Outcome of extrapolating a monotone sequence to its limit.
struct LimitEstimate {
  double value = 0.0;
  bool diverges = false;
  std::vector<double> sequence;
};

/// Limit of a sequence evaluated at geometrically shrinking offsets. Divergence is declared
/// when |a_k| exceeds `blowup` or successive increments stop contracting (ratio > 0.5);
/// otherwise the tail is Aitken-accelerated.
[[nodiscard]] inline LimitEstimate extrapolate_limit(std::vector<double> seq, double blowup = 1e6) {
  LimitEstimate est;
  est.sequence = std::move(seq);
  const auto& a = est.sequence;
  if (a.empty()) return est;
  for (double v : a) {
    if (!std::isfinite(v) || std::abs(v) > blowup) {
      est.diverges = true;
      est.value = (v < 0.0 ? -1.0 : 1.0) * std::numeric_limits<double>::infinity();
      return est;
    }
  }
  const std::size_t n = a.size();
  est.value = a.back();
  if (n < 4) return est;
  const double d1 = a[n - 3] - a[n - 4];
  const double d2 = a[n - 2] - a[n - 3];
  const double d3 = a[n - 1] - a[n - 2];
  const double scale = std::max(1.0, std::abs(a.back()));
  if (std::abs(d3) <= 1e-13 * scale) return est;
  const double r1 = d2 / d1;
  const double r2 = d3 / d2;
  if (std::isfinite(r1) && std::isfinite(r2) && r1 > 0.5 && r2 > 0.5) {
    est.diverges = true;
    est.value = (d3 < 0.0 ? -1.0 : 1.0) * std::numeric_limits<double>::infinity();
    return est;
  }
  const double denom = d3 - d2;
  if (denom != 0.0 && std::isfinite(denom)) est.value = a[n - 1] - d3 * d3 / denom;
  return est;
}

}  // namespace pulsefield::numerics

namespace pulsefield {
using numerics::pi;
using numerics::two_pi;
}  // namespace pulsefield
