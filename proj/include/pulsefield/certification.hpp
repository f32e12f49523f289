#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "continuum.hpp"
#include "oscillator.hpp"
#include "quantile.hpp"

namespace pulsefield {

struct CertificationOptions {
  double tol_abs = 1e-4;
  double tol_rel = 0.1;
  double rho_floor = 1e-6;        ///< no claims once min ρ falls below this
  double pass_threshold = 0.99;   ///< fraction of intervals that must satisfy the bounds
  double lemma_tol = 1e-6;
};

struct IntervalCheck {
  double t0 = 0, t1 = 0, V0 = 0, V1 = 0;
  double dVdt = 0, lower = 0, upper = 0, slack = 0;
  double margin = 0;  ///< distance inside the slackened band (negative when violated)
  bool ok = true;
};

struct CertificationReport {
  bool hypothesis_met = false;
  bool stopped_near_synchrony = false;
  double kdz_min = 0, kdz_max = 0;
  std::vector<IntervalCheck> intervals;
  std::vector<double> lemma_slack;  ///< 4π − 2·min(q_min, q*_min) − V per row with finite V
  std::size_t checked = 0, violations = 0, increasing = 0;
  double pass_fraction = 1.0;
  double worst_margin = std::numeric_limits<double>::infinity();
  double worst_lemma_slack = std::numeric_limits<double>::infinity();
  bool passed = true;
  std::string verdict;
};

/// Checks J0·min(K·Z')·V − slack ≤ ΔV/Δt ≤ J0·max(K·Z')·V + slack on every logged interval,
/// with J0·V averaged by the trapezoid rule and slack = tol_abs + tol_rel·V.
[[nodiscard]] inline CertificationReport certify_theorem_bounds(const std::vector<LogRow>& rows, double kdz_min,
                                                                double kdz_max, bool constant_curvature,
                                                                double q_min_reference,
                                                                const CertificationOptions& opt = {}) {
  CertificationReport rep;
  rep.kdz_min = kdz_min;
  rep.kdz_max = kdz_max;
  rep.hypothesis_met = constant_curvature;
  for (const auto& r : rows) {
    if (!std::isfinite(r.V)) continue;
    const double qm = std::isfinite(q_min_reference) ? std::min(r.q_min, q_min_reference) : r.q_min;
    const double slack = 2.0 * numerics::two_pi - 2.0 * qm - r.V;
    rep.lemma_slack.push_back(slack);
    rep.worst_lemma_slack = std::min(rep.worst_lemma_slack, slack);
  }
  if (!rep.hypothesis_met) {
    rep.verdict = "hypothesis_not_met";
    rep.passed = true;
    return rep;
  }
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const auto& a = rows[k - 1];
    const auto& b = rows[k];
    if (!std::isfinite(a.V) || !std::isfinite(b.V) || !(b.t > a.t)) continue;
    if (a.rho_min < opt.rho_floor || b.rho_min < opt.rho_floor) {
      rep.stopped_near_synchrony = true;
      break;
    }
    IntervalCheck c;
    c.t0 = a.t;
    c.t1 = b.t;
    c.V0 = a.V;
    c.V1 = b.V;
    c.dVdt = (b.V - a.V) / (b.t - a.t);
    const double jv = 0.5 * (a.J0 * a.V + b.J0 * b.V);
    c.lower = kdz_min * jv;
    c.upper = kdz_max * jv;
    c.slack = opt.tol_abs + opt.tol_rel * 0.5 * (a.V + b.V);
    c.margin = std::min(c.dVdt - (c.lower - c.slack), (c.upper + c.slack) - c.dVdt);
    c.ok = c.margin >= 0.0;
    rep.checked += 1;
    rep.violations += c.ok ? 0 : 1;
    rep.increasing += b.V > a.V ? 1 : 0;
    rep.worst_margin = std::min(rep.worst_margin, c.margin);
    rep.intervals.push_back(c);
  }
  rep.pass_fraction =
      rep.checked ? static_cast<double>(rep.checked - rep.violations) / static_cast<double>(rep.checked) : 1.0;
  rep.passed = rep.pass_fraction >= opt.pass_threshold && rep.worst_lemma_slack >= -opt.lemma_tol;
  rep.verdict = rep.passed ? "bounds_hold" : "bounds_violated";
  return rep;
}

[[nodiscard]] inline CertificationReport certify_theorem_bounds(const TrajectoryLog& log, const OscillatorModel& m,
                                                                double K, const CertificationOptions& opt = {}) {
  const auto cr = coupling_range(m, K);
  const auto& cls = m.classification();
  const bool constant = !cls.curvature.mixed() || K == 0.0;
  return certify_theorem_bounds(log.rows, cr.kdz_min, cr.kdz_max, constant, log.q_min_reference, opt);
}

struct DecayFit {
  double rate = std::numeric_limits<double>::quiet_NaN();  ///< slope of log V; negative for decay
  double intercept = std::numeric_limits<double>::quiet_NaN();
  double bracket_lo = 0, bracket_hi = 0;
  double J_min = 0, J_max = 0;
  std::size_t points = 0;
  bool truncated = false;
  bool in_bracket = false;
};

/// Least-squares slope of log V over the second half of the run; samples below the 1e-12
/// floor are dropped. The verdict compares −rate against [J_min·min|K·Z'|, J_max·max|K·Z'|]
/// widened by 10%.
[[nodiscard]] inline DecayFit fit_decay_rate(const std::vector<LogRow>& rows, double J_min, double J_max,
                                             double kdz_min, double kdz_max, double floor = 1e-12) {
  DecayFit fit;
  fit.J_min = J_min;
  fit.J_max = J_max;
  const bool same_sign = (kdz_min > 0.0) == (kdz_max > 0.0) && kdz_min != 0.0 && kdz_max != 0.0;
  const double amin = same_sign ? std::min(std::abs(kdz_min), std::abs(kdz_max)) : 0.0;
  const double amax = std::max(std::abs(kdz_min), std::abs(kdz_max));
  fit.bracket_lo = 0.9 * J_min * amin;
  fit.bracket_hi = 1.1 * J_max * amax;
  if (rows.empty()) return fit;
  const double t_mid = rows.front().t + 0.5 * (rows.back().t - rows.front().t);
  double st = 0, sy = 0, stt = 0, sty = 0;
  std::size_t n = 0;
  for (const auto& r : rows) {
    if (r.t < t_mid || !std::isfinite(r.V)) continue;
    if (r.V < floor) {
      fit.truncated = true;
      break;
    }
    const double y = std::log(r.V);
    st += r.t;
    sy += y;
    stt += r.t * r.t;
    sty += r.t * y;
    ++n;
  }
  fit.points = n;
  if (n < 2) return fit;
  const double dn = static_cast<double>(n);
  const double den = dn * stt - st * st;
  if (den == 0.0) return fit;
  fit.rate = (dn * sty - st * sy) / den;
  fit.intercept = (sy - fit.rate * st) / dn;
  const double decay = -fit.rate;
  fit.in_bracket = decay >= fit.bracket_lo && decay <= fit.bracket_hi;
  return fit;
}

[[nodiscard]] inline DecayFit fit_decay_rate(const TrajectoryLog& log, const OscillatorModel& m, double K,
                                             std::size_t cells) {
  const auto cr = coupling_range(m, K);
  const PrcTable tab(m, cells);
  const auto win = first_crossing_window(tab, m.omega(), K, log.history);
  return fit_decay_rate(log.rows, win.J_min, win.J_max, cr.kdz_min, cr.kdz_max);
}

struct NegativeControlReport {
  // Total-variation distance between densities, started from a state matching ρ* at both ends.
  double vbis_t0 = 0, vbis_dt = 0;
  double vbis_delta = 0, v_delta = 0, vbis_tol = 0;
  bool vbis_demonstrated = false;
  // Seeded search for an increase of the L² quantile distance.
  std::uint64_t seed = 0;
  std::size_t trials = 0, hits = 0;
  double best_increase = -std::numeric_limits<double>::infinity();
  bool inconclusive = true;
};

/// Runs both negative-control demonstrations for a model with K·Z' < 0 and an existing
/// stationary state.
[[nodiscard]] inline NegativeControlReport negative_controls(const OscillatorModel& m, double K, std::size_t cells,
                                                             std::uint64_t seed = 12345, std::size_t trials = 64,
                                                             double tol = 1e-4) {
  NegativeControlReport rep;
  rep.seed = seed;
  rep.vbis_tol = tol;
  const auto ref = grid_stationary(m, K, cells);
  if (!ref) return rep;
  SolverOptions opt;
  opt.n_theta = cells;
  opt.cfl = 0.5;
  const ContinuumSolver solver(m, K, opt);
  const QuantileProfile qref(*ref);
  const double h = two_pi / static_cast<double>(cells);

  auto evolve = [&](DensityField s, double duration) -> std::optional<DensityField> {
    auto c = solver.close_boundary(std::move(s));
    if (c.blowup) return std::nullopt;
    s = std::move(c.state);
    const double t_end = s.t + duration;
    while (s.t < t_end - 1e-14) {
      const double dt = std::min(solver.stable_dt(s), t_end - s.t);
      auto out = solver.step(s, dt);
      if (out.blowup) return std::nullopt;
      s = std::move(out.state);
    }
    return s;
  };

  {
    // g vanishes at both ends and has zero ρ*-weighted mean, so ρ(0) = ρ*(0) and J0 = J*.
    double a = 0, b = 0;
    for (std::size_t i = 1; i <= cells; ++i) {
      const double th = h * static_cast<double>(i);
      a += ref->rho[i] * std::sin(th);
      b += ref->rho[i] * std::sin(0.5 * th);
    }
    const double c = a / b;
    const double eps = 0.3;
    DensityField s = *ref;
    for (std::size_t i = 0; i <= cells; ++i) {
      const double th = i == cells ? two_pi : h * static_cast<double>(i);
      s.rho[i] = ref->rho[i] * (1.0 + eps * (std::sin(th) - c * std::sin(0.5 * th)));
    }
    s.rho.back() = ref->rho.back();
    s.rho.front() = ref->rho.front();
    const double duration = 20.0 * solver.stable_dt(*ref);
    rep.vbis_dt = duration;
    if (auto e = evolve(s, duration)) {
      auto c0 = solver.close_boundary(s);
      rep.vbis_t0 = density_l1(c0.state, *ref);
      rep.vbis_delta = density_l1(*e, *ref) - rep.vbis_t0;
      rep.v_delta = lyapunov_tv(QuantileProfile(*e), qref) - lyapunov_tv(QuantileProfile(c0.state), qref);
      rep.vbis_demonstrated = std::abs(rep.vbis_delta) < tol && rep.v_delta < -10.0 * tol;
    }
  }

  // Perturbations built from sin(kθ/2) vanish at both ends, so the boundary flux starts at J*.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> amp(-1.0, 1.0);
  double w_half = 0.0;
  for (std::size_t i = 1; i <= cells; ++i) w_half += ref->rho[i] * std::sin(0.5 * h * static_cast<double>(i));
  for (std::size_t trial = 0; trial < trials; ++trial) {
    ++rep.trials;
    std::vector<double> a(6);
    for (auto& c : a) c = amp(rng);
    auto g = [&](double th) {
      double v = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) v += a[k] * std::sin(0.5 * static_cast<double>(k + 1) * th);
      return v;
    };
    double mean = 0.0, gmax = 0.0;
    for (std::size_t i = 1; i <= cells; ++i) {
      const double th = h * static_cast<double>(i);
      mean += ref->rho[i] * g(th);
      gmax = std::max(gmax, std::abs(g(th)));
    }
    const double c = mean / w_half;
    DensityField s = *ref;
    const double eps = 0.5 / (gmax + std::abs(c));
    for (std::size_t i = 0; i <= cells; ++i) {
      const double th = i == cells ? two_pi : h * static_cast<double>(i);
      s.rho[i] *= 1.0 + eps * (g(th) - c * std::sin(0.5 * th));
    }
    auto c0 = solver.close_boundary(s);
    if (c0.blowup) continue;
    const double before = quantile_l2(QuantileProfile(c0.state), qref);
    auto e = evolve(c0.state, 20.0 * solver.stable_dt(c0.state));
    if (!e) continue;
    const double increase = quantile_l2(QuantileProfile(*e), qref) - before;
    rep.best_increase = std::max(rep.best_increase, increase);
    if (increase > 1e-9 * std::max(1.0, before)) ++rep.hits;
  }
  rep.inconclusive = rep.hits == 0;
  return rep;
}

}  // namespace pulsefield
