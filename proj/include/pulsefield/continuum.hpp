#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "density.hpp"
#include "errors.hpp"
#include "numerics.hpp"
#include "oscillator.hpp"
#include "quantile.hpp"
#include "stationary.hpp"

namespace pulsefield {

enum class Scheme { Upwind, SemiLagrangian };
enum class BlowupKind { FluxBlowup, DensityBlowup };

[[nodiscard]] inline const char* to_string(Scheme s) { return s == Scheme::Upwind ? "upwind" : "semilagrangian"; }
[[nodiscard]] inline const char* to_string(BlowupKind k) {
  return k == BlowupKind::FluxBlowup ? "flux_blowup" : "density_blowup";
}

/// Finite-time singularity of the continuum model (the synchronous state).
struct BlowupEvent {
  double t_fin = 0.0;
  BlowupKind kind = BlowupKind::FluxBlowup;
  std::string witness;  ///< name of the critical quantity
  double value = 0.0;
  double threshold = 0.0;
};

class BlowupError : public std::runtime_error {
 public:
  explicit BlowupError(BlowupEvent e) : std::runtime_error(e.witness), event_(std::move(e)) {}
  [[nodiscard]] const BlowupEvent& event() const { return event_; }

 private:
  BlowupEvent event_;
};

inline constexpr double default_eps_sing = 1e-8;

/// J0 = ω·ρ0/(1 − K·Z(0)·ρ0). Throws BlowupError when the denominator drops below eps.
[[nodiscard]] inline double boundary_flux(double rho0, const OscillatorModel& m, double K,
                                          double eps = default_eps_sing) {
  const double kz0 = K * m.prc(0.0);
  const double den = 1.0 - kz0 * rho0;
  if (!(den > eps))
    throw BlowupError({0.0, BlowupKind::FluxBlowup, "1 - K Z(0) rho(0)", den, eps});
  return m.omega() * rho0 / den;
}

/// v(θ_i) = ω + K·Z(θ_i)·J0 on `cells + 1` nodes. Throws BlowupError when v stalls.
[[nodiscard]] inline std::vector<double> velocity_field(const OscillatorModel& m, double K, double J0,
                                                        std::size_t cells, double eps = default_eps_sing) {
  if (!std::isfinite(J0)) throw std::invalid_argument("velocity_field needs a finite flux");
  std::vector<double> v(cells + 1);
  const double h = two_pi / static_cast<double>(cells);
  for (std::size_t i = 0; i <= cells; ++i) {
    const double th = i == cells ? two_pi : h * static_cast<double>(i);
    v[i] = m.omega() + K * m.prc(th) * J0;
    if (!(v[i] > eps * m.omega()))
      throw BlowupError({0.0, BlowupKind::DensityBlowup, "phase velocity", v[i], eps * m.omega()});
  }
  return v;
}

/// Z and Z' tabulated on a uniform phase grid, for repeated evaluation off the nodes.
class PrcTable {
 public:
  PrcTable(const OscillatorModel& m, std::size_t cells) {
    auto th = numerics::linspace(0.0, two_pi, cells + 1);
    z_.resize(th.size());
    dz_.resize(th.size());
    for (std::size_t i = 0; i < th.size(); ++i) {
      z_[i] = m.prc(th[i]);
      dz_[i] = m.prc_derivative(th[i]);
    }
    zi_ = numerics::Pchip(th, z_);
    dzi_ = numerics::Pchip(std::move(th), dz_);
  }
  [[nodiscard]] double Z(double th) const { return zi_(std::clamp(th, 0.0, two_pi)); }
  [[nodiscard]] double dZ(double th) const { return dzi_(std::clamp(th, 0.0, two_pi)); }
  [[nodiscard]] const std::vector<double>& z_nodes() const { return z_; }
  [[nodiscard]] const std::vector<double>& dz_nodes() const { return dz_; }

 private:
  std::vector<double> z_, dz_;
  numerics::Pchip zi_, dzi_;
};

struct SolverOptions {
  Scheme scheme = Scheme::Upwind;
  std::size_t n_theta = 2048;
  double cfl = 0.5;
  double eps_sing = default_eps_sing;
  double flux_cap = 0.0;  ///< 0 selects 1e6·ω/(2π)
  double t_max = 40.0;
  std::size_t log_stride = 200;
  std::vector<double> snapshot_times;
  std::size_t max_steps = 50'000'000;
};

struct StepOutcome {
  DensityField state;
  std::optional<BlowupEvent> blowup;
};

/// Stationary profile of the discrete scheme: v_i·ρ_i = J_h on every node with Δθ·Σρ_i = 1.
/// Used as the Lyapunov reference so that V measures distance to the grid's own fixed point.
[[nodiscard]] inline std::optional<DensityField> grid_stationary(const OscillatorModel& m, double K,
                                                                 std::size_t cells) {
  PrcTable tab(m, cells);
  const auto& z = tab.z_nodes();
  const double w = m.omega();
  const double h = two_pi / static_cast<double>(cells);
  double kz_min = std::numeric_limits<double>::infinity();
  for (double zi : z) kz_min = std::min(kz_min, K * zi);
  auto G = [&](double J) {
    double s = 0.0;
    for (std::size_t i = 1; i <= cells; ++i) s += J / (w + K * z[i] * J);
    return s * h - 1.0;
  };
  double hi = 0.0;
  bool ok = false;
  if (kz_min < 0.0) {
    const double cap = w / -kz_min;
    for (int k = 1; k <= 15 && !ok; ++k) {
      hi = (1.0 - std::pow(10.0, -k)) * cap;
      ok = G(hi) > 0.0;
    }
  } else {
    hi = w / two_pi;
    for (int i = 0; i < 200 && !ok; ++i) {
      ok = G(hi) > 0.0;
      if (!ok) hi *= 2.0;
    }
  }
  if (!ok) return std::nullopt;
  const double J = numerics::bisect(G, 0.0, hi, 0.0, 2000);
  std::vector<double> rho(cells + 1);
  for (std::size_t i = 0; i <= cells; ++i) rho[i] = J / (w + K * z[i] * J);
  return DensityField(std::move(rho), J, 0.0);
}

/// Discrete stationary reference when the continuum stationary state exists.
[[nodiscard]] inline std::optional<DensityField> lyapunov_reference(const OscillatorModel& m, double K,
                                                                    std::size_t cells) {
  if (!existence_condition(m, K).exists) return std::nullopt;
  return grid_stationary(m, K, cells);
}

/// One logged sample of a continuum run.
struct LogRow {
  double t = 0.0, J0 = 0.0, mass = 0.0, rho_min = 0.0, rho_max = 0.0;
  double V = std::numeric_limits<double>::quiet_NaN();
  double q_min = std::numeric_limits<double>::quiet_NaN();
  std::string event;
};

/// Boundary data after every step.
struct HistoryPoint {
  double t, J0, rho_end, rho_start;
};

struct TrajectoryLog {
  std::vector<LogRow> rows;
  std::vector<HistoryPoint> history;
  std::vector<DensityField> snapshots;   ///< first state at or after each requested time
  std::vector<double> snapshot_requested;  ///< the requested time of each snapshot
  std::optional<BlowupEvent> blowup;
  double omega = 0.0;
  double K = 0.0;
  double q_min_reference = std::numeric_limits<double>::quiet_NaN();
  bool has_reference = false;
  std::size_t steps = 0;
  double mass_initial = 0.0;
  double max_mass_drift = 0.0;
  double runtime_seconds = 0.0;
};

class ContinuumSolver {
 public:
  ContinuumSolver(OscillatorModel model, double K, SolverOptions opt = {})
      : model_(std::move(model)), K_(K), opt_(std::move(opt)), table_(model_, opt_.n_theta) {
    if (opt_.n_theta < 8) throw std::invalid_argument("n_theta must be at least 8");
    if (!(opt_.cfl > 0.0)) throw std::invalid_argument("cfl must be positive");
    if (opt_.flux_cap <= 0.0) opt_.flux_cap = 1e6 * model_.omega() / two_pi;
    h_ = two_pi / static_cast<double>(opt_.n_theta);
    const auto& z = table_.z_nodes();
    kz0_ = K_ * z.front();
    kzN_ = K_ * z.back();
  }

  [[nodiscard]] const OscillatorModel& model() const { return model_; }
  [[nodiscard]] double K() const { return K_; }
  [[nodiscard]] const SolverOptions& options() const { return opt_; }
  [[nodiscard]] const PrcTable& prc_table() const { return table_; }
  [[nodiscard]] double dtheta() const { return h_; }

  /// Completes a density from its interior: J0 from the outflow node and ρ(0) from the
  /// boundary relation. Reports a blow-up instead of producing a singular state.
  [[nodiscard]] StepOutcome close_boundary(DensityField d) const {
    if (d.cells() != opt_.n_theta) throw std::invalid_argument("density grid does not match solver");
    const double rhoN = d.rho.back();
    const double t = d.t;
    const double den = 1.0 - kzN_ * rhoN;
    if (!(den > opt_.eps_sing))
      return {std::move(d), BlowupEvent{t, BlowupKind::FluxBlowup, "1 - K Z(2pi) rho(2pi)", den, opt_.eps_sing}};
    const double J0 = model_.omega() * rhoN / den;
    if (!(J0 < opt_.flux_cap))
      return {std::move(d), BlowupEvent{t, BlowupKind::FluxBlowup, "J0", J0, opt_.flux_cap}};
    const auto& z = table_.z_nodes();
    double vmin = std::numeric_limits<double>::infinity();
    for (double zi : z) vmin = std::min(vmin, model_.omega() + K_ * zi * J0);
    if (!(vmin > opt_.eps_sing * model_.omega()))
      return {std::move(d), BlowupEvent{t, BlowupKind::DensityBlowup, "min v", vmin, opt_.eps_sing * model_.omega()}};
    d.J0 = J0;
    d.rho.front() = J0 / (model_.omega() + kz0_ * J0);
    return {std::move(d), std::nullopt};
  }

  [[nodiscard]] double max_velocity(double J0) const {
    double vmax = 0.0;
    for (double zi : table_.z_nodes()) vmax = std::max(vmax, model_.omega() + K_ * zi * J0);
    return vmax;
  }

  [[nodiscard]] double stable_dt(const DensityField& d) const { return opt_.cfl * h_ / max_velocity(d.J0); }

  /// Advances a boundary-consistent state by dt.
  [[nodiscard]] StepOutcome step(const DensityField& s, double dt) const {
    if (s.cells() != opt_.n_theta) throw std::invalid_argument("density grid does not match solver");
    if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
    const double limit = opt_.cfl * h_ / max_velocity(s.J0);
    if (dt > limit * (1.0 + 1e-12)) {
      std::ostringstream os;
      os << "time step " << dt << " exceeds CFL limit " << limit;
      throw CflViolation(os.str());
    }
    DensityField next = opt_.scheme == Scheme::Upwind ? upwind(s, dt) : semi_lagrangian(s, dt);
    next.t = s.t + dt;
    return close_boundary(std::move(next));
  }

  [[nodiscard]] TrajectoryLog integrate(const DensityField& initial,
                                        const std::optional<DensityField>& reference = std::nullopt) const {
    const auto clock0 = std::chrono::steady_clock::now();
    TrajectoryLog log;
    log.omega = model_.omega();
    log.K = K_;
    std::optional<QuantileProfile> ref;
    if (reference) {
      ref.emplace(*reference);
      log.has_reference = true;
      log.q_min_reference = ref->q_min();
    }
    auto start = close_boundary(initial);
    DensityField s = std::move(start.state);
    log.mass_initial = s.cell_mass();
    auto add_row = [&](const DensityField& d, std::string ev) {
      LogRow r;
      r.t = d.t;
      r.J0 = d.J0;
      r.mass = d.cell_mass();
      r.rho_min = d.min();
      r.rho_max = d.max();
      if (r.rho_min >= 0.0) {
        QuantileProfile qp(d);
        r.q_min = qp.q_min();
        if (ref && !qp.degenerate()) r.V = lyapunov_tv(qp, *ref);
      }
      r.event = std::move(ev);
      log.rows.push_back(std::move(r));
    };
    if (start.blowup) {
      log.blowup = start.blowup;
      log.blowup->t_fin = s.t;
      add_row(s, to_string(log.blowup->kind));
      log.runtime_seconds = seconds_since(clock0);
      return log;
    }
    add_row(s, "init");
    log.history.push_back({s.t, s.J0, s.rho.back(), s.rho.front()});
    auto snaps = opt_.snapshot_times;
    std::sort(snaps.begin(), snaps.end());
    std::size_t next_snap = 0;
    auto take_snapshots = [&](const DensityField& d) {
      while (next_snap < snaps.size() && d.t >= snaps[next_snap] - 1e-12) {
        log.snapshots.push_back(d);
        log.snapshot_requested.push_back(snaps[next_snap]);
        ++next_snap;
      }
    };
    take_snapshots(s);
    const double t_end = opt_.t_max;
    while (s.t < t_end - 1e-12 && log.steps < opt_.max_steps) {
      double dt = stable_dt(s);
      if (s.t + dt > t_end) dt = t_end - s.t;
      auto out = step(s, dt);
      ++log.steps;
      if (out.blowup) {
        log.blowup = out.blowup;
        log.blowup->t_fin = s.t + dt;
        add_row(s, to_string(log.blowup->kind));
        log.rows.back().t = log.blowup->t_fin;
        break;
      }
      s = std::move(out.state);
      log.history.push_back({s.t, s.J0, s.rho.back(), s.rho.front()});
      log.max_mass_drift = std::max(log.max_mass_drift, std::abs(s.cell_mass() - log.mass_initial));
      take_snapshots(s);
      const bool last = !(s.t < t_end - 1e-12);
      if (log.steps % opt_.log_stride == 0 || last) add_row(s, last ? "end" : "log");
    }
    log.runtime_seconds = seconds_since(clock0);
    return log;
  }

 private:
  static double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }

  DensityField upwind(const DensityField& s, double dt) const {
    const auto& z = table_.z_nodes();
    const std::size_t n = opt_.n_theta;
    const double lam = dt / h_;
    const double w = model_.omega();
    const double kj = K_ * s.J0;
    DensityField next = s;
    double prev_flux = (w + kj * z[n]) * s.rho[n];
    for (std::size_t i = 1; i <= n; ++i) {
      const double flux = (w + kj * z[i]) * s.rho[i];
      next.rho[i] = s.rho[i] - lam * (flux - prev_flux);
      prev_flux = flux;
    }
    return next;
  }

  DensityField semi_lagrangian(const DensityField& s, double dt) const {
    const std::size_t n = opt_.n_theta;
    const double w = model_.omega();
    const double kj = K_ * s.J0;
    auto v = [&](double th) { return w + kj * table_.Z(th); };
    const double v0 = w + kj * table_.z_nodes().front();
    const double vN = w + kj * table_.z_nodes().back();
    const numerics::Pchip interp(numerics::linspace(0.0, two_pi, n + 1), s.rho);
    auto sample = [&](double th) {
      const double pos = th / h_;
      const double k = std::round(pos);
      if (std::abs(pos - k) < 1e-9) return s.rho[static_cast<std::size_t>(std::clamp(k, 0.0, static_cast<double>(n)))];
      return interp(std::clamp(th, 0.0, two_pi));
    };
    auto trace = [&](double th, double tau, double& log_factor) {
      const double mid = th - 0.5 * tau * v(th);
      const double foot = th - tau * v(std::clamp(mid, 0.0, two_pi));
      log_factor -= tau * kj * table_.dZ(std::clamp(0.5 * (th + foot), 0.0, two_pi));
      return foot;
    };
    DensityField next = s;
    for (std::size_t i = 1; i <= n; ++i) {
      const double th = i == n ? two_pi : h_ * static_cast<double>(i);
      double lf = 0.0;
      double foot = trace(th, dt, lf);
      double value = 0.0;
      if (foot >= 0.0) {
        value = sample(foot);
      } else {
        lf = 0.0;
        const double tau = dt * th / (th - foot);
        trace(th, tau, lf);
        foot = trace(two_pi, dt - tau, lf);
        value = sample(std::max(foot, 0.0)) * vN / v0;
      }
      next.rho[i] = value * std::exp(lf);
    }
    return next;
  }

  OscillatorModel model_;
  double K_;
  SolverOptions opt_;
  PrcTable table_;
  double h_ = 0.0;
  double kz0_ = 0.0, kzN_ = 0.0;
};

enum class InitialKind { Uniform, VonMises, Perturbed };

/// Rescales so that Δθ·Σ_{i≥1} ρ_i = 1.
inline DensityField normalized(DensityField d) {
  const double m = d.cell_mass();
  if (!(m > 0.0)) throw std::invalid_argument("initial density has no mass");
  for (auto& r : d.rho) r /= m;
  return d;
}

[[nodiscard]] inline DensityField initial_uniform(std::size_t cells) {
  return normalized(DensityField::from_function([](double) { return 1.0; }, cells));
}

[[nodiscard]] inline DensityField initial_vonmises(std::size_t cells, double kappa, double mu) {
  return normalized(DensityField::from_function([&](double th) { return std::exp(kappa * std::cos(th - mu)); }, cells));
}

/// ρ*(θ)(1 + ε cos θ), renormalized.
[[nodiscard]] inline DensityField initial_perturbed(const StationaryState& st, std::size_t cells, double epsilon) {
  return normalized(
      DensityField::from_function([&](double th) { return st.density(th) * (1.0 + epsilon * std::cos(th)); }, cells));
}

/// Curve Λ(t) with dΛ/dt = ω + K·Z(Λ)·J0(t) and the density carried along it.
struct CharacteristicTrace {
  std::vector<double> t, lambda, rho;
  bool crossed = false;
  bool truncated = false;
  double t_cross = std::numeric_limits<double>::quiet_NaN();
  double rho_cross = std::numeric_limits<double>::quiet_NaN();
};

/// Integrates one characteristic through the recorded flux history by Heun's method until
/// it reaches 2π (crossed) or the history ends (truncated).
[[nodiscard]] inline CharacteristicTrace characteristic_trace(const PrcTable& tab, double omega, double K,
                                                              const std::vector<HistoryPoint>& hist,
                                                              double theta_start, double t_start, double rho_start) {
  CharacteristicTrace tr;
  if (hist.size() < 2 || t_start < hist.front().t || t_start > hist.back().t) {
    tr.truncated = true;
    return tr;
  }
  auto it = std::upper_bound(hist.begin(), hist.end(), t_start, [](double t, const HistoryPoint& p) { return t < p.t; });
  std::size_t k = static_cast<std::size_t>(it - hist.begin());
  k = k == 0 ? 0 : k - 1;
  const auto j_at = [&](std::size_t idx, double t) {
    const auto& a = hist[idx];
    const auto& b = hist[std::min(idx + 1, hist.size() - 1)];
    if (b.t == a.t) return a.J0;
    return a.J0 + (b.J0 - a.J0) * (t - a.t) / (b.t - a.t);
  };
  double t = t_start, lam = theta_start, lr = std::log(rho_start);
  tr.t.push_back(t);
  tr.lambda.push_back(lam);
  tr.rho.push_back(rho_start);
  while (k + 1 < hist.size()) {
    const double t1 = hist[k + 1].t;
    const double hstep = t1 - t;
    if (hstep > 0.0) {
      const double j0 = j_at(k, t), j1 = hist[k + 1].J0;
      const double k1 = omega + K * tab.Z(lam) * j0;
      const double lp = lam + hstep * k1;
      const double k2 = omega + K * tab.Z(lp) * j1;
      const double lam1 = lam + 0.5 * hstep * (k1 + k2);
      const double lr1 = lr - 0.5 * hstep * K * (j0 * tab.dZ(lam) + j1 * tab.dZ(std::min(lp, two_pi)));
      if (lam1 >= two_pi) {
        const double frac = (two_pi - lam) / (lam1 - lam);
        tr.crossed = true;
        tr.t_cross = t + frac * hstep;
        tr.rho_cross = std::exp(lr + frac * (lr1 - lr));
        tr.t.push_back(tr.t_cross);
        tr.lambda.push_back(two_pi);
        tr.rho.push_back(tr.rho_cross);
        return tr;
      }
      t = t1;
      lam = lam1;
      lr = lr1;
      tr.t.push_back(t);
      tr.lambda.push_back(lam);
      tr.rho.push_back(std::exp(lr));
    }
    ++k;
  }
  tr.truncated = true;
  return tr;
}

/// Boundary density ρ(2π, t) recorded in the history, linearly interpolated.
[[nodiscard]] inline double history_rho_end(const std::vector<HistoryPoint>& hist, double t) {
  auto it = std::upper_bound(hist.begin(), hist.end(), t, [](double tt, const HistoryPoint& p) { return tt < p.t; });
  if (it == hist.begin()) return hist.front().rho_end;
  if (it == hist.end()) return hist.back().rho_end;
  const auto& b = *it;
  const auto& a = *(it - 1);
  return a.rho_end + (b.rho_end - a.rho_end) * (t - a.t) / (b.t - a.t);
}

/// Flux extrema over the window in which the characteristic launched from θ = 0 at t = 0
/// first reaches 2π.
struct CrossingWindow {
  double t_bar = std::numeric_limits<double>::quiet_NaN();
  double J_min = std::numeric_limits<double>::quiet_NaN();
  double J_max = std::numeric_limits<double>::quiet_NaN();
  bool complete = false;
};

[[nodiscard]] inline CrossingWindow first_crossing_window(const PrcTable& tab, double omega, double K,
                                                          const std::vector<HistoryPoint>& hist) {
  CrossingWindow w;
  if (hist.size() < 2) return w;
  const auto tr = characteristic_trace(tab, omega, K, hist, 0.0, hist.front().t, 1.0);
  w.complete = tr.crossed;
  w.t_bar = tr.crossed ? tr.t_cross : hist.back().t;
  w.J_min = std::numeric_limits<double>::infinity();
  w.J_max = -std::numeric_limits<double>::infinity();
  for (const auto& p : hist) {
    if (p.t > w.t_bar) break;
    w.J_min = std::min(w.J_min, p.J0);
    w.J_max = std::max(w.J_max, p.J0);
  }
  return w;
}

enum class Admissibility { AdmissibleBySign, AdmissibleBySufficientBound, AdmissibleNumerically, InadmissibleNumerically };

[[nodiscard]] inline const char* to_string(Admissibility a) {
  switch (a) {
    case Admissibility::AdmissibleBySign: return "admissible_sign";
    case Admissibility::AdmissibleBySufficientBound: return "admissible_bound";
    case Admissibility::AdmissibleNumerically: return "admissible_numerical";
    case Admissibility::InadmissibleNumerically: return "inadmissible_numerical";
  }
  return "?";
}

struct AdmissibilityVerdict {
  Admissibility verdict = Admissibility::InadmissibleNumerically;
  std::string reason;
  double t_bar = std::numeric_limits<double>::quiet_NaN();
};

/// Whether the flux stays finite and positive while the initial mass first crosses 2π.
/// Closed-form verdicts apply when K·Z' < 0; otherwise the first crossing window is simulated.
[[nodiscard]] inline AdmissibilityVerdict check_admissibility(const DensityField& rho0, const OscillatorModel& m,
                                                              double K, SolverOptions opt = {}) {
  AdmissibilityVerdict res;
  const auto cr = coupling_range(m, K);
  const std::size_t n = rho0.cells();
  if (cr.kdz_max < 0.0) {
    if (K * m.prc(two_pi) <= 0.0) {
      res.verdict = Admissibility::AdmissibleBySign;
      res.reason = "K Z' < 0 and K Z(2pi) <= 0";
      return res;
    }
    bool below = true;
    for (std::size_t i = 0; i <= n && below; ++i) {
      const double kz = K * m.prc(rho0.theta(i));
      if (kz > 0.0 && !(rho0.rho[i] < 1.0 / kz)) below = false;
    }
    if (below) {
      res.verdict = Admissibility::AdmissibleBySufficientBound;
      res.reason = "rho0 < 1/(K Z) wherever K Z > 0";
      return res;
    }
  }
  opt.n_theta = n;
  ContinuumSolver solver(m, K, opt);
  auto st = solver.close_boundary(rho0);
  if (st.blowup) {
    res.reason = std::string("singular at t = 0: ") + st.blowup->witness;
    return res;
  }
  DensityField s = std::move(st.state);
  const auto& tab = solver.prc_table();
  double lam = 0.0;
  const double cap = opt.flux_cap > 0.0 ? opt.flux_cap : 1e6 * m.omega() / two_pi;
  for (std::size_t k = 0; k < opt.max_steps; ++k) {
    const double dt = solver.stable_dt(s);
    const double j0 = s.J0;
    auto out = solver.step(s, dt);
    if (out.blowup) {
      res.reason = std::string("blow-up before first crossing: ") + out.blowup->witness;
      res.t_bar = s.t + dt;
      return res;
    }
    const double j1 = out.state.J0;
    const double k1 = m.omega() + K * tab.Z(lam) * j0;
    const double lp = std::min(lam + dt * k1, two_pi);
    const double k2 = m.omega() + K * tab.Z(lp) * j1;
    lam += 0.5 * dt * (k1 + k2);
    s = std::move(out.state);
    if (!(s.J0 > 0.0 && s.J0 < cap)) {
      res.reason = "flux left (0, cap) before first crossing";
      res.t_bar = s.t;
      return res;
    }
    if (lam >= two_pi) {
      res.verdict = Admissibility::AdmissibleNumerically;
      res.reason = "flux bounded over the first crossing window";
      res.t_bar = s.t;
      return res;
    }
  }
  res.reason = "first crossing not reached";
  return res;
}

}  // namespace pulsefield
