#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "errors.hpp"
#include "numerics.hpp"
#include "oscillator.hpp"
#include "quantile.hpp"
#include "stationary.hpp"

namespace pulsefield {

/// One firing event: the triggering oscillator and how many others it absorbed.
struct FiringRecord {
  double t = 0.0;
  std::size_t id = 0;
  std::size_t absorbed = 0;
};

struct PopulationState {
  std::vector<double> x;
  double t = 0.0;
};

struct EventOutcome {
  std::size_t fired = 0;
  bool synchrony = false;  ///< the whole population fired together
  bool avalanche = false;  ///< synchrony reached with K ≥ x_hi − x_lo
};

/// Event-driven simulator of N identical pulse-coupled oscillators with kicks of K/N.
class FinitePopulation {
 public:
  static constexpr double tie_tolerance = 1e-12;

  FinitePopulation(OscillatorModel model, double K, std::size_t N) : model_(std::move(model)), K_(K), N_(N) {
    if (!model_.has_field()) throw UnsupportedError("finite populations need a vector field");
    if (N_ == 0) throw std::invalid_argument("population must be non-empty");
    if (!std::isfinite(K_)) throw ModelError("coupling strength must be finite");
  }

  [[nodiscard]] const OscillatorModel& model() const { return model_; }
  [[nodiscard]] double K() const { return K_; }
  [[nodiscard]] std::size_t size() const { return N_; }

  /// x(τ) under ẋ = F(x) from x0.
  [[nodiscard]] double flow(double x0, double tau) const {
    if (tau == 0.0) return x0;
    if (model_.kind() == ModelKind::LIF) {
      const double S = model_.lif_S(), g = model_.lif_gamma();
      if (g == 0.0) return x0 + S * tau;
      const double xs = S / g;
      return xs - (xs - x0) * std::exp(-g * tau);
    }
    return flow_rk4(x0, tau);
  }

  /// x(τ) by fixed-step RK4, whatever the model kind.
  [[nodiscard]] double flow_rk4(double x0, double tau) const {
    const int n = std::max(1, static_cast<int>(std::ceil(tau / rk_step())));
    const double h = tau / n;
    double x = x0;
    for (int i = 0; i < n; ++i) x = rk4(x, h);
    return x;
  }

  /// Time for a state to reach x_hi.
  [[nodiscard]] double time_to_threshold(double x0) const {
    const double hi = model_.x_hi();
    if (x0 >= hi) return 0.0;
    if (model_.kind() == ModelKind::LIF) {
      const double S = model_.lif_S(), g = model_.lif_gamma();
      if (g == 0.0) return (hi - x0) / S;
      return std::log((S - g * x0) / (S - g * hi)) / g;
    }
    const double h = rk_step();
    double t = 0.0, x = x0;
    for (;;) {
      const double xn = rk4(x, h);
      if (xn >= hi) {
        const double xa = x;
        const double tau = numerics::bisect([&](double s) { return rk4(xa, s) - hi; }, 0.0, h, 1e-13);
        return t + tau;
      }
      x = xn;
      t += h;
    }
  }

  /// Evolves every oscillator until the leader reaches x_hi.
  void advance_to_next_firing(PopulationState& s) const {
    const double lead = *std::max_element(s.x.begin(), s.x.end());
    const double tau = time_to_threshold(lead);
    const double hi = model_.x_hi();
    for (auto& x : s.x) x = (x == lead) ? hi : std::min(hi, flow(x, tau));
    s.t += tau;
  }

  /// Resets every oscillator at threshold, kicks the rest by K/N per firing and lets the
  /// cascade run to a fixpoint. States pushed below x_lo are held at x_lo.
  EventOutcome apply_firing(PopulationState& s) const {
    const double hi = model_.x_hi(), lo = model_.x_lo();
    const double kick = K_ / static_cast<double>(N_);
    std::vector<char> fired(s.x.size(), 0);
    std::size_t count = 0;
    for (std::size_t k = 0; k < s.x.size(); ++k)
      if (s.x[k] >= hi - tie_tolerance) {
        fired[k] = 1;
        ++count;
      }
    if (count == 0) throw std::logic_error("apply_firing called with no oscillator at threshold");
    for (bool grew = true; grew;) {
      grew = false;
      for (std::size_t k = 0; k < s.x.size(); ++k)
        if (!fired[k] && s.x[k] + kick * static_cast<double>(count) >= hi - tie_tolerance) {
          fired[k] = 1;
          ++count;
          grew = true;
        }
    }
    for (std::size_t k = 0; k < s.x.size(); ++k)
      s.x[k] = fired[k] ? lo : std::clamp(s.x[k] + kick * static_cast<double>(count), lo, hi);
    EventOutcome out;
    out.fired = count;
    out.synchrony = count == s.x.size();
    out.avalanche = out.synchrony && N_ > 1 && K_ >= hi - lo;
    return out;
  }

  struct Result {
    PopulationState final_state;
    std::vector<FiringRecord> firings;
    std::vector<std::vector<double>> snapshots;  ///< sorted phases just before each event
    std::size_t synchrony_event = 0;             ///< 1-based index of the first full-synchrony event, 0 if none
    bool avalanche = false;
  };

  /// Alternates advance/apply for `n_firings` events or until t_max.
  [[nodiscard]] Result simulate(PopulationState s, std::size_t n_firings,
                                double t_max = std::numeric_limits<double>::infinity(), bool keep_snapshots = true,
                                bool stop_at_synchrony = false) const {
    if (s.x.size() != N_) throw std::invalid_argument("state size does not match population");
    for (double x : s.x)
      if (!(x >= model_.x_lo() && x <= model_.x_hi())) throw DomainError("initial state outside [x_lo, x_hi]");
    Result r;
    for (std::size_t e = 0; e < n_firings; ++e) {
      advance_to_next_firing(s);
      if (s.t > t_max) break;
      const auto lead = static_cast<std::size_t>(std::max_element(s.x.begin(), s.x.end()) - s.x.begin());
      std::size_t initial = 0;
      for (double x : s.x) initial += x >= model_.x_hi() - tie_tolerance ? 1 : 0;
      if (keep_snapshots) r.snapshots.push_back(phases(s));
      const auto out = apply_firing(s);
      r.firings.push_back({s.t, lead, out.fired - initial});
      if (out.synchrony && r.synchrony_event == 0) {
        r.synchrony_event = e + 1;
        r.avalanche = out.avalanche;
        if (stop_at_synchrony) break;
      }
    }
    r.final_state = std::move(s);
    return r;
  }

  /// Sorted phases of a state.
  [[nodiscard]] std::vector<double> phases(const PopulationState& s) const {
    std::vector<double> th(s.x.size());
    for (std::size_t k = 0; k < s.x.size(); ++k) th[k] = model_.phase_of_state(std::clamp(s.x[k], model_.x_lo(), model_.x_hi()));
    std::sort(th.begin(), th.end());
    return th;
  }

  /// Phase-locked state of the discrete map: the configuration repeating (up to relabelling)
  /// at every event. The oscillator reset j events ago has seen j flows and j − 1 kicks.
  [[nodiscard]] std::vector<double> phase_locked_configuration() const {
    const double lo = model_.x_lo(), hi = model_.x_hi();
    const double kick = K_ / static_cast<double>(N_);
    auto run = [&](double tau, std::vector<double>* out) {
      double x = lo;
      for (std::size_t j = 1; j <= N_; ++j) {
        x = flow(x, tau);
        if (out) out->push_back(std::min(x, hi));
        if (j < N_) x = std::clamp(x + kick, lo, std::numeric_limits<double>::max());
        if (x >= hi && j < N_) return x;
      }
      return x;
    };
    const double period = two_pi / model_.omega();
    double hi_tau = period / static_cast<double>(N_);
    while (run(hi_tau, nullptr) < hi) hi_tau *= 2.0;
    const double tau = numerics::bisect([&](double t) { return run(t, nullptr) - hi; }, 0.0, hi_tau, 0.0, 400);
    std::vector<double> xs;
    run(tau, &xs);
    std::vector<double> th;
    for (double x : xs) th.push_back(model_.phase_of_state(std::clamp(x, lo, hi)));
    std::sort(th.begin(), th.end());
    th.back() = two_pi;
    return th;
  }

  /// Seeded uniform-random states in [x_lo, x_hi).
  [[nodiscard]] PopulationState random_state(std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(model_.x_lo(), model_.x_hi());
    PopulationState s;
    s.x.resize(N_);
    for (auto& x : s.x) x = u(rng);
    return s;
  }

  /// States placed at the given phases.
  [[nodiscard]] PopulationState state_from_phases(const std::vector<double>& theta) const {
    PopulationState s;
    for (double th : theta) s.x.push_back(model_.state_of_phase(std::clamp(th, 0.0, two_pi)));
    return s;
  }

 private:
  [[nodiscard]] double rk_step() const { return 1e-3 * two_pi / model_.omega(); }

  [[nodiscard]] double rk4(double x, double h) const {
    auto f = [&](double y) { return model_.F(std::clamp(y, model_.x_lo(), model_.x_hi())); };
    const double k1 = f(x);
    const double k2 = f(x + 0.5 * h * k1);
    const double k3 = f(x + 0.5 * h * k2);
    const double k4 = f(x + h * k3);
    return x + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }

  OscillatorModel model_;
  double K_;
  std::size_t N_;
};

/// N-quantiles of the stationary density.
[[nodiscard]] inline std::vector<double> splay_reference(std::size_t N, const OscillatorModel& m, double K) {
  const auto st = solve_stationary_flux(m, K, 1e-10, RootMethod::Bisection, 8192);
  return n_quantiles(QuantileProfile(st.rho_star()), N);
}

}  // namespace pulsefield
