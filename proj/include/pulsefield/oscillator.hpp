#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "numerics.hpp"

namespace pulsefield {

using numerics::two_pi;
using numerics::pi;

enum class ModelKind { TabulatedField, LIF, AnalyticField, HomoclinicPRC };
enum class Monotonicity { Decreasing, Increasing, Neutral, Mixed };

/// Sign class of Z''. A constant PRC sets both flags; neither flag set means mixed curvature.
struct Curvature {
  bool non_negative = false;
  bool non_positive = false;
  [[nodiscard]] bool mixed() const { return !non_negative && !non_positive; }
};

struct Classification {
  Monotonicity monotonicity = Monotonicity::Mixed;
  Curvature curvature;
};

[[nodiscard]] inline const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::TabulatedField: return "tabulated";
    case ModelKind::LIF: return "lif";
    case ModelKind::AnalyticField: return "analytic";
    case ModelKind::HomoclinicPRC: return "homoclinic";
  }
  return "?";
}

[[nodiscard]] inline const char* to_string(Monotonicity m) {
  switch (m) {
    case Monotonicity::Decreasing: return "decreasing";
    case Monotonicity::Increasing: return "increasing";
    case Monotonicity::Neutral: return "neutral";
    case Monotonicity::Mixed: return "mixed";
  }
  return "?";
}

[[nodiscard]] inline const char* to_string(const Curvature& c) {
  if (c.non_negative && c.non_positive) return "flat";
  if (c.non_negative) return "convex";
  if (c.non_positive) return "concave";
  return "mixed";
}

/// Coupling strength; positive is excitatory, negative inhibitory.
struct CouplingSpec {
  double K = 0.0;
  explicit CouplingSpec(double k) : K(k) {
    if (!std::isfinite(k)) throw ModelError("coupling strength must be finite");
  }
};

using ScalarFn = std::function<double(double)>;

/// ω = 2π / ∫ dx/F over [x_lo, x_hi].
[[nodiscard]] inline double natural_frequency(const ScalarFn& F, double x_lo, double x_hi, double tol = 1e-12) {
  if (!(x_hi > x_lo)) throw ModelError("natural_frequency: need x_lo < x_hi");
  for (double x : numerics::linspace(x_lo, x_hi, 1025)) {
    const double f = F(x);
    if (!(f > 0.0) || !std::isfinite(f)) throw ModelError("vector field must be positive and finite on the domain");
  }
  const double period = numerics::adaptive_simpson([&](double x) { return 1.0 / F(x); }, x_lo, x_hi, tol);
  if (!(period > 0.0) || !std::isfinite(period)) throw ModelError("1/F is not integrable on the domain");
  return two_pi / period;
}

/// One integrate-and-fire oscillator (or a bare PRC). Immutable; copies share state.
class OscillatorModel {
 public:
  static constexpr std::size_t table_nodes = 2048;

  /// ẋ = S − γx on [x_lo, x_hi], handled in closed form.
  [[nodiscard]] static OscillatorModel lif(double S, double gamma, double x_lo = 0.0, double x_hi = 1.0) {
    if (!std::isfinite(S) || !std::isfinite(gamma)) throw ModelError("LIF parameters must be finite");
    if (!(x_hi > x_lo)) throw ModelError("LIF: need x_lo < x_hi");
    if (!(S - gamma * x_lo > 0.0) || !(S - gamma * x_hi > 0.0))
      throw ModelError("LIF: S - gamma*x must stay positive on [x_lo, x_hi]");
    OscillatorModel m(ModelKind::LIF, x_lo, x_hi);
    m.S_ = S;
    m.gamma_ = gamma;
    if (gamma == 0.0)
      m.omega_ = two_pi * S / (x_hi - x_lo);
    else
      m.omega_ = two_pi * gamma / std::log((S - gamma * x_lo) / (S - gamma * x_hi));
    m.finish_classification();
    return m;
  }

  /// Vector field given by samples (x_i, F_i), interpolated monotonically.
  [[nodiscard]] static OscillatorModel tabulated(std::vector<double> x, std::vector<double> F) {
    if (x.size() < 4) throw ModelError("tabulated field needs at least 4 samples");
    for (double f : F)
      if (!(f > 0.0) || !std::isfinite(f)) throw ModelError("tabulated field must be positive");
    auto interp = std::make_shared<numerics::Pchip>(std::move(x), std::move(F));
    const double lo = interp->front(), hi = interp->back();
    OscillatorModel m(ModelKind::TabulatedField, lo, hi);
    m.build_field([interp](double s) { return (*interp)(s); }, [interp](double s) { return interp->derivative(s); },
                  [interp](double s) { return interp->second_derivative(s); });
    return m;
  }

  /// Reads a CSV with header `x,F`.
  [[nodiscard]] static OscillatorModel from_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open field table " + path);
    std::string line;
    if (!std::getline(in, line)) throw ModelError("empty field table " + path);
    line.erase(std::remove_if(line.begin(), line.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); }),
               line.end());
    if (line != "x,F") throw ModelError("field table " + path + " must start with header x,F");
    std::vector<double> xs, fs;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream row(line);
      double a = 0, b = 0;
      if (!(row >> a >> b)) throw ModelError(path + ":" + std::to_string(lineno) + ": expected two numbers");
      xs.push_back(a);
      fs.push_back(b);
    }
    return tabulated(std::move(xs), std::move(fs));
  }

  /// Vector field given as callables. Without d2F the second derivative is differenced from dF.
  [[nodiscard]] static OscillatorModel analytic(ScalarFn F, ScalarFn dF, double x_lo, double x_hi,
                                                ScalarFn d2F = nullptr) {
    if (!F || !dF) throw ModelError("analytic field needs F and dF");
    if (!(x_hi > x_lo)) throw ModelError("analytic field: need x_lo < x_hi");
    if (!d2F) {
      const double h = 1e-5 * (x_hi - x_lo);
      d2F = [dF, h, x_lo, x_hi](double x) {
        const double a = std::max(x_lo, x - h), b = std::min(x_hi, x + h);
        return (dF(b) - dF(a)) / (b - a);
      };
    }
    OscillatorModel m(ModelKind::AnalyticField, x_lo, x_hi);
    m.build_field(std::move(F), std::move(dF), std::move(d2F));
    return m;
  }

  /// PRC of an oscillator near a homoclinic orbit: Z = Cω e^{2πλ/ω} e^{−λθ/ω}. Has no state map.
  [[nodiscard]] static OscillatorModel homoclinic(double C, double lambda_u, double omega) {
    if (!(C > 0.0) || !(lambda_u > 0.0) || !(omega > 0.0) || !std::isfinite(C * lambda_u * omega))
      throw ModelError("homoclinic PRC needs C, lambda_u, omega > 0");
    OscillatorModel m(ModelKind::HomoclinicPRC, 0.0, 0.0);
    m.C_ = C;
    m.lambda_u_ = lambda_u;
    m.omega_ = omega;
    m.finish_classification();
    return m;
  }

  [[nodiscard]] ModelKind kind() const { return kind_; }
  [[nodiscard]] bool has_field() const { return kind_ != ModelKind::HomoclinicPRC; }
  [[nodiscard]] double x_lo() const { return x_lo_; }
  [[nodiscard]] double x_hi() const { return x_hi_; }
  [[nodiscard]] double omega() const { return omega_; }
  [[nodiscard]] const Classification& classification() const { return class_; }
  [[nodiscard]] double lif_S() const { return S_; }
  [[nodiscard]] double lif_gamma() const { return gamma_; }
  [[nodiscard]] double homoclinic_C() const { return C_; }
  [[nodiscard]] double homoclinic_lambda() const { return lambda_u_; }

  [[nodiscard]] double F(double x) const {
    switch (kind_) {
      case ModelKind::LIF: return S_ - gamma_ * x;
      case ModelKind::HomoclinicPRC: throw UnsupportedError("homoclinic PRC model has no vector field");
      default: return field_->F(x);
    }
  }

  [[nodiscard]] double dF(double x) const {
    switch (kind_) {
      case ModelKind::LIF: return -gamma_;
      case ModelKind::HomoclinicPRC: throw UnsupportedError("homoclinic PRC model has no vector field");
      default: return field_->dF(x);
    }
  }

  [[nodiscard]] double d2F(double x) const {
    switch (kind_) {
      case ModelKind::LIF: return 0.0;
      case ModelKind::HomoclinicPRC: throw UnsupportedError("homoclinic PRC model has no vector field");
      default: return field_->d2F(x);
    }
  }

  /// θ = ω ∫_{x_lo}^{x} ds/F(s).
  [[nodiscard]] double phase_of_state(double x) const {
    require_field("phase_of_state");
    if (!(x >= x_lo_ && x <= x_hi_)) throw DomainError("state outside [x_lo, x_hi]");
    if (x == x_lo_) return 0.0;
    if (x == x_hi_) return two_pi;
    if (kind_ == ModelKind::LIF) {
      if (gamma_ == 0.0) return omega_ * (x - x_lo_) / S_;
      return omega_ / gamma_ * std::log((S_ - gamma_ * x_lo_) / (S_ - gamma_ * x));
    }
    const auto& f = *field_;
    const std::size_t i = f.table.interval(x);
    const double partial = numerics::adaptive_simpson([&](double s) { return 1.0 / f.F(s); }, f.xs[i], x, 1e-14, 30, 1);
    return std::clamp(omega_ * (f.cumulative[i] + partial), 0.0, two_pi);
  }

  /// Inverse of phase_of_state, by bisection on the monotone map for numeric fields.
  [[nodiscard]] double state_of_phase(double theta) const {
    require_field("state_of_phase");
    check_phase(theta);
    if (theta == 0.0) return x_lo_;
    if (theta == two_pi) return x_hi_;
    if (kind_ == ModelKind::LIF) {
      if (gamma_ == 0.0) return x_lo_ + S_ * theta / omega_;
      const double xs = S_ / gamma_;
      return std::clamp(xs - (xs - x_lo_) * std::exp(-gamma_ * theta / omega_), x_lo_, x_hi_);
    }
    const auto& f = *field_;
    const double target = theta / omega_;
    auto it = std::upper_bound(f.cumulative.begin(), f.cumulative.end(), target);
    std::size_t i = static_cast<std::size_t>(it - f.cumulative.begin());
    i = std::clamp<std::size_t>(i == 0 ? 0 : i - 1, 0, f.xs.size() - 2);
    const double a = f.xs[i];
    const double base = f.cumulative[i];
    auto g = [&](double x) {
      return base + numerics::adaptive_simpson([&](double s) { return 1.0 / f.F(s); }, a, x, 1e-15, 30, 1) - target;
    };
    if (g(f.xs[i + 1]) <= 0.0) return f.xs[i + 1];
    return numerics::bisect(g, a, f.xs[i + 1], 0.0, 80);
  }

  /// Phase response curve Z(θ); ω/F(x(θ)) for integrate-and-fire kinds.
  [[nodiscard]] double prc(double theta) const {
    check_phase(theta);
    switch (kind_) {
      case ModelKind::LIF: return omega_ / (S_ - gamma_ * x_lo_) * std::exp(gamma_ * theta / omega_);
      case ModelKind::HomoclinicPRC:
        return C_ * omega_ * std::exp(two_pi * lambda_u_ / omega_) * std::exp(-lambda_u_ * theta / omega_);
      default: return omega_ / field_->F(state_of_phase(theta));
    }
  }

  [[nodiscard]] double prc_derivative(double theta) const {
    switch (kind_) {
      case ModelKind::LIF: return gamma_ / omega_ * prc(theta);
      case ModelKind::HomoclinicPRC: return -lambda_u_ / omega_ * prc(theta);
      default: {
        check_phase(theta);
        const double x = state_of_phase(theta);
        return -field_->dF(x) / field_->F(x);
      }
    }
  }

  [[nodiscard]] double prc_second_derivative(double theta) const {
    switch (kind_) {
      case ModelKind::LIF: return gamma_ * gamma_ / (omega_ * omega_) * prc(theta);
      case ModelKind::HomoclinicPRC: return lambda_u_ * lambda_u_ / (omega_ * omega_) * prc(theta);
      default: {
        check_phase(theta);
        const double x = state_of_phase(theta);
        const double f = field_->F(x), df = field_->dF(x);
        return -(field_->d2F(x) * f - df * df) / (omega_ * f);
      }
    }
  }

  /// ∫_0^{2π} g(Z(θ)) dθ. For numeric fields the integral is taken in state space
  /// (dθ = ω/F dx, Z = ω/F), which avoids inverting the phase map. The rule is graded
  /// toward the peak of the integrand, so near-singular g are handled.
  template <class G>
  [[nodiscard]] double integrate_over_phase(const G& g) const {
    if (kind_ == ModelKind::LIF || kind_ == ModelKind::HomoclinicPRC)
      return numerics::peaked_integral([&](double th) { return g(prc(th)); }, 0.0, two_pi);
    const auto& f = *field_;
    return numerics::peaked_integral(
        [&](double x) {
          const double z = omega_ / f.F(x);
          return g(z) * z;
        },
        x_lo_, x_hi_);
  }

  /// Z sampled at n uniform phases on [0, 2π].
  [[nodiscard]] std::vector<double> sample_prc(std::size_t n) const {
    std::vector<double> out(n);
    const auto th = numerics::linspace(0.0, two_pi, n);
    for (std::size_t i = 0; i < n; ++i) out[i] = prc(th[i]);
    return out;
  }

  /// Extrema of Z and Z' over a dense phase sample.
  struct PrcRange {
    double z_min, z_max, dz_min, dz_max;
  };

  [[nodiscard]] const PrcRange& prc_range() const { return range_; }

 private:
  struct Field {
    ScalarFn F, dF, d2F;
    std::vector<double> xs;          // uniform state nodes
    std::vector<double> cumulative;  // ∫_{x_lo}^{x_i} ds/F
    numerics::Pchip table;           // used only for interval lookup
  };

  OscillatorModel(ModelKind k, double lo, double hi) : kind_(k), x_lo_(lo), x_hi_(hi) {}

  void require_field(const char* op) const {
    if (!has_field()) throw UnsupportedError(std::string(op) + " needs a vector field");
  }

  static void check_phase(double theta) {
    if (!(theta >= 0.0 && theta <= two_pi)) throw DomainError("phase outside [0, 2pi]");
  }

  void build_field(ScalarFn F, ScalarFn dF, ScalarFn d2F) {
    auto f = std::make_shared<Field>();
    f->F = std::move(F);
    f->dF = std::move(dF);
    f->d2F = std::move(d2F);
    f->xs = numerics::linspace(x_lo_, x_hi_, table_nodes + 1);
    for (double x : f->xs) {
      const double v = f->F(x);
      if (!(v > 0.0) || !std::isfinite(v)) throw ModelError("vector field must be positive and finite on the domain");
    }
    f->cumulative.assign(f->xs.size(), 0.0);
    for (std::size_t i = 1; i < f->xs.size(); ++i) {
      const double piece =
          numerics::adaptive_simpson([&](double s) { return 1.0 / f->F(s); }, f->xs[i - 1], f->xs[i], 1e-15, 30, 1);
      f->cumulative[i] = f->cumulative[i - 1] + piece;
    }
    const double period = f->cumulative.back();
    if (!(period > 0.0) || !std::isfinite(period)) throw ModelError("1/F is not integrable on the domain");
    omega_ = two_pi / period;
    f->table = numerics::Pchip(f->xs, f->cumulative);
    field_ = std::move(f);
    finish_classification();
  }

  void finish_classification() {
    constexpr std::size_t n = 2049;
    const double h = two_pi / static_cast<double>(n - 1);
    std::vector<double> z(n), xs;
    const auto th = numerics::linspace(0.0, two_pi, n);
    const bool numeric = has_field() && kind_ != ModelKind::LIF;
    if (numeric) {
      xs.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        xs[i] = state_of_phase(th[i]);
        z[i] = omega_ / field_->F(xs[i]);
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) z[i] = prc(th[i]);
    }
    double zmax = 0.0;
    for (double v : z) zmax = std::max(zmax, std::abs(v));
    const double band = 1e-9 * zmax;
    bool pos1 = false, neg1 = false, pos2 = false, neg2 = false;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double d = (z[i + 1] - z[i]) / h;
      pos1 |= d > band;
      neg1 |= d < -band;
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double d2 = (z[i + 1] - 2.0 * z[i] + z[i - 1]) / (h * h);
      pos2 |= d2 > band;
      neg2 |= d2 < -band;
    }
    class_.monotonicity = pos1 && neg1 ? Monotonicity::Mixed
                          : pos1       ? Monotonicity::Increasing
                          : neg1       ? Monotonicity::Decreasing
                                       : Monotonicity::Neutral;
    class_.curvature.non_negative = !neg2;
    class_.curvature.non_positive = !pos2;

    range_.z_min = *std::min_element(z.begin(), z.end());
    range_.z_max = *std::max_element(z.begin(), z.end());
    range_.dz_min = std::numeric_limits<double>::infinity();
    range_.dz_max = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      double dz = 0.0;
      if (numeric)
        dz = -field_->dF(xs[i]) / field_->F(xs[i]);
      else
        dz = prc_derivative(th[i]);
      range_.dz_min = std::min(range_.dz_min, dz);
      range_.dz_max = std::max(range_.dz_max, dz);
    }
  }

  ModelKind kind_;
  double x_lo_, x_hi_;
  double omega_ = 0.0;
  double S_ = 0.0, gamma_ = 0.0;
  double C_ = 0.0, lambda_u_ = 0.0;
  std::shared_ptr<const Field> field_;
  Classification class_;
  PrcRange range_{};
};

/// Extrema of K·Z and K·Z' over the phase circle.
struct CouplingRange {
  double kz_min, kz_max, kdz_min, kdz_max;
};

[[nodiscard]] inline CouplingRange coupling_range(const OscillatorModel& m, double K) {
  const auto& r = m.prc_range();
  CouplingRange c{};
  c.kz_min = std::min(K * r.z_min, K * r.z_max);
  c.kz_max = std::max(K * r.z_min, K * r.z_max);
  c.kdz_min = std::min(K * r.dz_min, K * r.dz_max);
  c.kdz_max = std::max(K * r.dz_min, K * r.dz_max);
  return c;
}

}  // namespace pulsefield
