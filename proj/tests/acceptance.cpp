// End-to-end acceptance checks. Prints one [PASS]/[FAIL] line per criterion and exits
// non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <pulsefield/pulsefield.hpp>

#include "oracles.hpp"

using namespace pulsefield;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const char* id, const char* title, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  if (!o.pass) ++failures;
  std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << id << " " << title << ": " << o.detail << std::endl;
}

std::string fmt(double v, int prec = 6) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("pulsefield_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

const OscillatorModel& lif() {
  static const auto m = OscillatorModel::lif(2.1, 2.0);
  return m;
}

ExperimentConfig inhibitory_config() { return load_config(fs::path(PULSEFIELD_CONFIG_DIR) / "inhibitory.cfg"); }

/// Inhibitory LIF run at a given resolution, shared by several criteria.
struct InhibitoryRun {
  ExperimentConfig cfg;
  TrajectoryLog log;
};

const InhibitoryRun& inhibitory_run(std::size_t ntheta) {
  static std::map<std::size_t, InhibitoryRun> cache;
  auto it = cache.find(ntheta);
  if (it != cache.end()) return it->second;
  InhibitoryRun r;
  r.cfg = inhibitory_config();
  r.cfg.ntheta = ntheta;
  r.cfg.snapshot_times.clear();
  const ContinuumSolver solver(lif(), r.cfg.K, r.cfg.solver_options());
  r.log = solver.integrate(initial_uniform(ntheta), grid_stationary(lif(), r.cfg.K, ntheta));
  return cache.emplace(ntheta, std::move(r)).first->second;
}

}  // namespace

int main() {
  report("AC1", "inhibitory LIF terminal flux", [] {
    const auto cfg = inhibitory_config();
    const auto out = scratch("inhibitory");
    const auto t0 = std::chrono::steady_clock::now();
    const auto res = run_scenario(cfg, out);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto& run = inhibitory_run(2048);
    const double J = run.log.rows.back().J0;
    Outcome o;
    o.pass = res.exit_code == ExitOk && std::abs(J - 0.53) <= 0.02 && std::abs(res.J0_final - J) < 1e-12 &&
             run.log.runtime_seconds < 60.0;
    o.detail = "J0(t=40) = " + fmt(J, 8) + " (0.53 +/- 0.02), solver " + fmt(run.log.runtime_seconds, 3) +
               " s, full scenario " + fmt(wall, 3) + " s, exit " + std::to_string(res.exit_code);
    return o;
  });

  report("AC2", "stationary solver", [] {
    const oracle::Lif o;
    double worst_w = 0, worst_j = 0;
    for (double K : {-0.5, -0.1, 0.1, 0.5}) {
      const auto st = solve_stationary_flux(lif(), K);
      worst_w = std::max(worst_w, std::abs(normalization_functional(lif(), K, st.J_star()) - 1.0));
      const double ref = oracle::stationary_flux_bisection([&](double th) { return o.Z(th); }, o.omega(), K);
      worst_j = std::max(worst_j, std::abs(st.J_star() - ref));
    }
    const double j0 = solve_stationary_flux(lif(), 0.0).J_star();
    const double err0 = std::abs(j0 - lif().omega() / two_pi);
    Outcome out;
    out.pass = worst_w < 1e-8 && worst_j < 1e-8 && err0 < 1e-12;
    out.detail = "max |W(J*) - 1| = " + fmt(worst_w, 3) + ", max |J* - oracle| = " + fmt(worst_j, 3) +
                 ", K=0 |J* - omega/2pi| = " + fmt(err0, 3);
    return out;
  });

  report("AC3", "existence boundary at K = x_hi - x_lo", [] {
    ExperimentConfig c;
    const auto rows = sweep(c, "K", {0.9, 0.99, 1.01, 1.1}, scratch("ac3"), true);
    const std::vector<bool> expect{true, true, false, false};
    Outcome o;
    o.pass = rows.size() == 4;
    std::string flags;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      o.pass = o.pass && rows[i].exists == expect[i];
      flags += (i ? ", " : "") + fmt(rows[i].value) + " -> " + (rows[i].exists ? "true" : "false");
    }
    o.detail = flags;
    return o;
  });

  report("AC4", "Lyapunov decay within the theorem bounds", [] {
    const auto& fine = inhibitory_run(2048);
    const auto& coarse = inhibitory_run(1024);
    const auto opt = certification_options(fine.cfg);
    const auto rf = certify_theorem_bounds(fine.log, lif(), fine.cfg.K, opt);
    const auto rc = certify_theorem_bounds(coarse.log, lif(), coarse.cfg.K, opt);
    CertificationOptions raw;
    raw.tol_abs = 0.0;
    raw.tol_rel = 0.0;
    const auto ff = certify_theorem_bounds(fine.log, lif(), fine.cfg.K, raw);
    const auto fc = certify_theorem_bounds(coarse.log, lif(), coarse.cfg.K, raw);
    Outcome o;
    o.pass = rf.hypothesis_met && rf.pass_fraction >= 0.99 && rf.violations <= rc.violations;
    o.detail = "2048 cells: " + fmt(100 * rf.pass_fraction, 5) + "% of " + std::to_string(rf.checked) +
               " intervals, " + std::to_string(rf.violations) + " violations; 1024 cells: " +
               std::to_string(rc.violations) + " violations; without slack " + std::to_string(fc.violations) +
               " -> " + std::to_string(ff.violations) + "; worst margin " + fmt(rc.worst_margin, 3) + " -> " +
               fmt(rf.worst_margin, 3);
    return o;
  });

  report("AC5", "decay rate inside the rate bracket", [] {
    const auto& run = inhibitory_run(2048);
    const auto fit = fit_decay_rate(run.log, lif(), run.cfg.K, run.cfg.ntheta);
    Outcome o;
    o.pass = std::isfinite(fit.rate) && fit.in_bracket;
    o.detail = "rate " + fmt(-fit.rate) + " in [" + fmt(fit.bracket_lo) + ", " + fmt(fit.bracket_hi) +
               "] from J_min = " + fmt(fit.J_min) + ", J_max = " + fmt(fit.J_max) + " over " +
               std::to_string(fit.points) + " samples";
    return o;
  });

  report("AC6", "finite-time synchrony for K = +0.1", [] {
    const double K = 0.1;
    const auto st = solve_stationary_flux(lif(), K);
    // The uniform start is not corner-compatible, so the solution carries a jump at theta = 0
    // whose numerical smearing costs V about 4e-4 on the first interval at 2048 cells. The dip
    // halves per refinement and is gone at 4096, which is the resolution used here.
    const std::size_t n = 4096;
    SolverOptions opt;
    opt.n_theta = n;
    opt.t_max = 40.0;
    opt.log_stride = 40;
    const ContinuumSolver solver(lif(), K, opt);
    const auto ref = grid_stationary(lif(), K, n);
    struct Ic {
      const char* name;
      DensityField rho;
    };
    const std::vector<Ic> ics{{"uniform", initial_uniform(n)},
                              {"vonmises", initial_vonmises(n, 1.0, pi)},
                              {"perturbed", initial_perturbed(st, n, 0.2)}};
    Outcome o;
    o.pass = true;
    for (const auto& ic : ics) {
      const auto log = solver.integrate(ic.rho, ref);
      const auto rep = certify_theorem_bounds(log, lif(), K);
      std::size_t intervals = 0, rising = 0, q_down = 0;
      double q_first = std::numeric_limits<double>::quiet_NaN(), q_last = q_first;
      for (std::size_t k = 0; k < log.rows.size(); ++k) {
        const auto& r = log.rows[k];
        if (!std::isfinite(r.V)) continue;
        if (std::isnan(q_first)) q_first = r.q_min;
        q_last = r.q_min;
        if (k == 0 || !std::isfinite(log.rows[k - 1].V) ||
            (log.rows[k].event != "log" && log.rows[k].event != "end"))
          continue;
        ++intervals;
        rising += r.V > log.rows[k - 1].V ? 1 : 0;
        q_down += r.q_min <= log.rows[k - 1].q_min ? 1 : 0;
      }
      const bool ok = log.blowup && std::isfinite(log.blowup->t_fin) && intervals > 0 && rising == intervals &&
                      rep.worst_lemma_slack >= -1e-6 && q_last < q_first;
      o.pass = o.pass && ok;
      o.detail += std::string(o.detail.empty() ? "" : "; ") + ic.name + ": " +
                  (log.blowup ? std::string(to_string(log.blowup->kind)) + " at t_fin = " + fmt(log.blowup->t_fin)
                              : std::string("no blow-up")) +
                  ", V rising " + std::to_string(rising) + "/" + std::to_string(intervals) +
                  ", lemma slack >= " + fmt(rep.worst_lemma_slack, 3) + ", q_min " + fmt(q_first, 4) + " -> " +
                  fmt(q_last, 4) + " (non-increasing " + std::to_string(q_down) + "/" + std::to_string(intervals) + ")";
    }
    SolverOptions coarse = opt;
    coarse.n_theta = 2048;
    coarse.log_stride = 20;
    coarse.t_max = 0.01;
    const auto head = ContinuumSolver(lif(), K, coarse).integrate(initial_uniform(2048), grid_stationary(lif(), K, 2048));
    o.detail += "; uniform at 2048 cells, first interval dV = " + fmt(head.rows[1].V - head.rows[0].V, 3);
    const auto excit = run_scenario(load_config(fs::path(PULSEFIELD_CONFIG_DIR) / "excitatory.cfg"), scratch("excitatory"));
    o.pass = o.pass && excit.exit_code == ExitOk && excit.status == "blowup";
    o.detail += "; excitatory.cfg exit " + std::to_string(excit.exit_code);
    return o;
  });

  report("AC7", "neutral transport at K = 0", [] {
    auto cfg = load_config(fs::path(PULSEFIELD_CONFIG_DIR) / "neutral_k0.cfg");
    const double period = two_pi / lif().omega();
    auto opt = cfg.solver_options();
    opt.log_stride = 1;
    opt.t_max = 2.05 * period;
    const ContinuumSolver solver(lif(), 0.0, opt);
    const auto log = solver.integrate(make_initial(cfg, std::nullopt), grid_stationary(lif(), 0.0, cfg.ntheta));
    double vmin = 1e300, vmax = -1e300;
    for (const auto& r : log.rows)
      if (r.t <= period * (1 + 1e-9)) {
        vmin = std::min(vmin, r.V);
        vmax = std::max(vmax, r.V);
      }
    // Period of J0 from the lag minimizing the mismatch of the recorded boundary flux.
    const auto& h = log.history;
    const double dt = h[1].t - h[0].t;
    std::size_t best_lag = 0;
    double best = 1e300;
    const std::size_t lo = static_cast<std::size_t>(0.5 * period / dt), hi = static_cast<std::size_t>(1.5 * period / dt);
    for (std::size_t lag = lo; lag <= hi && lag < h.size(); ++lag) {
      double s = 0;
      std::size_t cnt = 0;
      for (std::size_t k = 0; k + lag < h.size(); ++k, ++cnt) s += std::pow(h[k + lag].J0 - h[k].J0, 2);
      s /= static_cast<double>(cnt);
      if (s < best) {
        best = s;
        best_lag = lag;
      }
    }
    const double measured = static_cast<double>(best_lag) * dt;
    Outcome o;
    o.pass = log.rows.size() > 2 && vmax - vmin <= 1e-6 && std::abs(measured - period) <= 0.01 * period;
    o.detail = "V spread over one period " + fmt(vmax - vmin, 3) + " (V = " + fmt(vmin) + "), J0 period " +
               fmt(measured, 8) + " vs 2pi/omega = " + fmt(period, 8);
    return o;
  });

  report("AC8", "finite population parallel", [] {
    const auto locked = run_finite(lif(), -0.1, 100, 1, 4000);
    const auto quant = splay_reference(100, lif(), -0.1);
    const double gap_q = detail::max_component_gap(locked.sim.snapshots.back(), quant);
    const double gap_ref = detail::max_component_gap(locked.reference, quant);
    const FinitePopulation pop(lif(), 0.1, 50);
    const auto sync = pop.simulate(pop.random_state(1), 200);
    const bool single_cluster = sync.synchrony_event > 0 && sync.synchrony_event <= 200;
    Outcome o;
    o.pass = locked.non_increasing_fraction >= 0.95 && gap_q <= two_pi / 100 && single_cluster;
    o.detail = "N=100: V_N non-increasing on " + fmt(100 * locked.non_increasing_fraction, 5) + "% of " +
               std::to_string(locked.sections) + " sections (V_N " + fmt(locked.V.front(), 4) + " -> " +
               fmt(locked.V.back(), 3) + "), final max |theta_k - Q(k/N)| = " + fmt(gap_q, 4) +
               " (2pi/N = " + fmt(two_pi / 100, 4) + "; phase-locked vs quantiles " + fmt(gap_ref, 4) +
               "); N=50, K=+0.1: full synchrony at event " + std::to_string(sync.synchrony_event);
    return o;
  });

  report("AC9", "characteristics against the grid solution", [] {
    const auto& run = inhibitory_run(2048);
    const PrcTable tab(lif(), 2048);
    const auto& hist = run.log.history;
    const auto rho0 = initial_uniform(2048);
    double worst = 0;
    std::size_t traces = 0;
    std::string gaps;
    const auto check = [&](double th, double t0, double rho_start) {
      const auto tr = characteristic_trace(tab, lif().omega(), run.cfg.K, hist, th, t0, rho_start);
      if (!tr.crossed) return;
      const double gap = std::abs(tr.rho_cross / history_rho_end(hist, tr.t_cross) - 1.0);
      worst = std::max(worst, gap);
      gaps += (traces++ ? ", " : " (") + fmt(gap, 2);
    };
    for (double th : {1.0, pi, 5.0}) check(th, 0.0, rho0.rho[1]);
    for (double t0 : {0.5, 1.0, 5.0, 20.0}) {
      auto it = std::lower_bound(hist.begin(), hist.end(), t0, [](const HistoryPoint& p, double t) { return p.t < t; });
      check(0.0, it->t, it->rho_start);
    }
    gaps += ")";
    // The curve leaving the corner (0, 0) carries the jump between the uniform start and the
    // boundary inflow, so the grid holds a smeared average there. Reported, not gated.
    const auto corner = characteristic_trace(tab, lif().omega(), run.cfg.K, hist, 0.0, 0.0, hist.front().rho_start);
    const double corner_gap = std::abs(corner.rho_cross / history_rho_end(hist, corner.t_cross) - 1.0);
    Outcome o;
    o.pass = traces == 7 && worst <= 0.02;
    o.detail = std::to_string(traces) + " characteristics, worst relative gap at theta = 2pi " + fmt(worst, 3) + gaps +
               "; corner characteristic on the initial jump " + fmt(corner_gap, 3);
    return o;
  });

  report("AC10", "negative controls", [] {
    const auto rep = negative_controls(lif(), -0.1, 2048, 12345, 64);
    Outcome o;
    o.pass = rep.vbis_demonstrated;
    o.detail = "density TV change " + fmt(rep.vbis_delta, 3) + " vs quantile TV change " + fmt(rep.v_delta, 3) +
               " over " + fmt(rep.vbis_dt, 3) + " (tol " + fmt(rep.vbis_tol, 2) + "); L2 quantile search: " +
               (rep.hits ? std::to_string(rep.hits) + " increasing states of " + std::to_string(rep.trials)
                         : "inconclusive, 0 of " + std::to_string(rep.trials) +
                               " trials increased (best change " + fmt(rep.best_increase, 3) + ")");
    return o;
  });

  std::cout << (failures ? std::to_string(failures) + " criteria failed" : std::string("all criteria passed"))
            << std::endl;
  return failures ? 1 : 0;
}
