#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "certification.hpp"
#include "config.hpp"
#include "continuum.hpp"
#include "finite_population.hpp"
#include "io.hpp"
#include "quantile.hpp"
#include "stationary.hpp"

namespace pulsefield {

enum ExitCode : int { ExitOk = 0, ExitUnexpectedBlowup = 2, ExitCertificationViolation = 3, ExitConfigError = 4 };

/// Worker cap from PULSEFIELD_THREADS, else the hardware concurrency.
[[nodiscard]] inline std::size_t worker_count() {
  if (const char* env = std::getenv("PULSEFIELD_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && n > 0) return static_cast<std::size_t>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// ---------------------------------------------------------------------------------------------
// stationary

[[nodiscard]] inline io::json stationary_json(const OscillatorModel& m, double K, std::optional<StationaryState>* out = nullptr) {
  io::json j;
  const auto ex = existence_condition(m, K);
  j["K"] = K;
  j["omega"] = m.omega();
  j["r"] = ex.r;
  j["exists"] = ex.exists;
  j["existence_limit"] = io::number(ex.limit);
  j["J_star"] = nullptr;
  j["J_upper"] = io::number(flux_upper_limit(m, K));
  if (m.has_field()) {
    const auto b = coupling_bounds(m);
    j["K_lower"] = io::number(b.K_lower);
    j["K_upper"] = b.K_upper;
  } else {
    j["K_lower"] = nullptr;
    j["K_upper"] = nullptr;
  }
  const auto& cls = m.classification();
  j["monotonicity"] = to_string(cls.monotonicity);
  j["curvature"] = to_string(cls.curvature);
  if (ex.exists) {
    try {
      auto st = solve_stationary_flux(m, K);
      j["J_star"] = st.J_star();
      j["W_residual"] = normalization_functional(m, K, st.J_star()) - 1.0;
      if (out) out->emplace(std::move(st));
    } catch (const NoStationaryState& e) {
      j["exists"] = false;
      j["error"] = e.what();
    }
  }
  return j;
}

// ---------------------------------------------------------------------------------------------
// finite populations

struct FiniteReport {
  FinitePopulation::Result sim;
  std::vector<double> reference;     ///< phase-locked configuration of the discrete map
  std::vector<double> quantile_ref;  ///< N-quantiles of ρ*, when the stationary state exists
  std::vector<double> V;             ///< discrete Lyapunov value at each Poincaré section
  std::size_t sections = 0, non_increasing = 0;
  double non_increasing_fraction = 1.0;
  double final_max_gap = std::numeric_limits<double>::quiet_NaN();           ///< vs phase-locked
  double final_max_gap_quantiles = std::numeric_limits<double>::quiet_NaN();  ///< vs N-quantiles
};

namespace detail {

inline std::vector<double> closed_phases(std::vector<double> th) {
  if (!th.empty() && std::abs(th.back() - two_pi) < 1e-9) th.back() = two_pi;
  return th;
}

inline double max_component_gap(const std::vector<double>& a, const std::vector<double>& b) {
  double g = 0.0;
  for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k) g = std::max(g, std::abs(a[k] - b[k]));
  return g;
}

}  // namespace detail

/// Event-driven run from a seeded random state, with the discrete Lyapunov function tracked
/// against the phase-locked configuration at every firing.
[[nodiscard]] inline FiniteReport run_finite(const OscillatorModel& m, double K, std::size_t N, std::uint64_t seed,
                                             std::size_t nfirings) {
  FiniteReport rep;
  const FinitePopulation pop(m, K, N);
  const bool locks = existence_condition(m, K).exists && coupling_range(m, K).kdz_max < 0.0;
  rep.sim = pop.simulate(pop.random_state(seed), nfirings, std::numeric_limits<double>::infinity(), true, false);
  if (!locks) return rep;
  rep.reference = pop.phase_locked_configuration();
  try {
    rep.quantile_ref = splay_reference(N, m, K);
  } catch (const std::exception&) {
    rep.quantile_ref.clear();
  }
  for (auto& snap : rep.sim.snapshots) {
    snap = detail::closed_phases(std::move(snap));
    if (snap.back() != two_pi) continue;
    rep.V.push_back(discrete_lyapunov(snap, rep.reference));
  }
  for (std::size_t k = 1; k < rep.V.size(); ++k) {
    ++rep.sections;
    if (rep.V[k] <= rep.V[k - 1] + 1e-12) ++rep.non_increasing;
  }
  rep.non_increasing_fraction =
      rep.sections ? static_cast<double>(rep.non_increasing) / static_cast<double>(rep.sections) : 1.0;
  if (!rep.sim.snapshots.empty()) {
    rep.final_max_gap = detail::max_component_gap(rep.sim.snapshots.back(), rep.reference);
    if (!rep.quantile_ref.empty())
      rep.final_max_gap_quantiles = detail::max_component_gap(rep.sim.snapshots.back(), rep.quantile_ref);
  }
  return rep;
}

inline io::json write_finite_outputs(const std::filesystem::path& dir, const FiniteReport& rep, double K,
                                     std::size_t N, std::uint64_t seed) {
  io::ensure_dir(dir);
  {
    io::CsvWriter w(dir / "firings.csv", {"t", "id", "absorbed"});
    for (const auto& f : rep.sim.firings) {
      w.cell(f.t).cell(f.id).cell(f.absorbed);
      w.end_row();
    }
  }
  {
    std::vector<std::string> header{"event"};
    for (std::size_t k = 1; k <= N; ++k) header.push_back("theta_" + std::to_string(k));
    io::CsvWriter w(dir / "snapshots.csv", header);
    for (std::size_t e = 0; e < rep.sim.snapshots.size(); ++e) {
      w.cell(e + 1);
      for (double th : rep.sim.snapshots[e]) w.cell(th);
      w.end_row();
    }
  }
  io::json s;
  s["N"] = N;
  s["K"] = K;
  s["seed"] = seed;
  s["events"] = rep.sim.firings.size();
  s["t_final"] = rep.sim.final_state.t;
  s["synchrony"] = rep.sim.synchrony_event != 0;
  s["synchrony_event"] = rep.sim.synchrony_event;
  s["avalanche"] = rep.sim.avalanche;
  s["poincare_sections"] = rep.sections;
  s["V_non_increasing_fraction"] = rep.non_increasing_fraction;
  s["V_first"] = rep.V.empty() ? io::json(nullptr) : io::number(rep.V.front());
  s["V_last"] = rep.V.empty() ? io::json(nullptr) : io::number(rep.V.back());
  s["final_max_gap_phase_locked"] = io::number(rep.final_max_gap);
  s["final_max_gap_quantiles"] = io::number(rep.final_max_gap_quantiles);
  io::write_json(dir / "summary.json", s);
  return s;
}

// ---------------------------------------------------------------------------------------------
// continuum runs

[[nodiscard]] inline DensityField make_initial(const ExperimentConfig& c, const std::optional<StationaryState>& st) {
  if (c.initial.type == "uniform") return initial_uniform(c.ntheta);
  if (c.initial.type == "vonmises") return initial_vonmises(c.ntheta, c.initial.kappa, c.initial.mu);
  if (!st) throw ConfigError("initial.type", "perturbed needs an existing stationary state");
  return initial_perturbed(*st, c.ntheta, c.initial.epsilon);
}

[[nodiscard]] inline CertificationOptions certification_options(const ExperimentConfig& c) {
  CertificationOptions o;
  o.tol_abs = c.tol_abs;
  o.tol_rel = c.tol_rel;
  return o;
}

[[nodiscard]] inline io::json decay_json(const DecayFit& f) {
  return {{"rate", io::number(f.rate)},         {"bracket_lo", f.bracket_lo}, {"bracket_hi", f.bracket_hi},
          {"J_min", io::number(f.J_min)},       {"J_max", io::number(f.J_max)},
          {"points", f.points},                 {"truncated", f.truncated},  {"in_bracket", f.in_bracket}};
}

[[nodiscard]] inline io::json certification_json(const CertificationReport& r, const std::optional<DecayFit>& fit) {
  io::json j;
  j["verdict"] = r.verdict;
  j["passed"] = r.passed;
  j["hypothesis_met"] = r.hypothesis_met;
  j["kdz_min"] = r.kdz_min;
  j["kdz_max"] = r.kdz_max;
  j["intervals_checked"] = r.checked;
  j["violations"] = r.violations;
  j["increasing_intervals"] = r.increasing;
  j["pass_fraction"] = r.pass_fraction;
  j["worst_slack"] = io::number(r.worst_margin);
  j["worst_lemma_slack"] = io::number(r.worst_lemma_slack);
  j["stopped_near_synchrony"] = r.stopped_near_synchrony;
  j["decay"] = fit ? decay_json(*fit) : io::json(nullptr);
  return j;
}

[[nodiscard]] inline io::json negative_controls_json(const NegativeControlReport& n) {
  return {{"vbis_t0", n.vbis_t0},
          {"vbis_interval", n.vbis_dt},
          {"vbis_delta", n.vbis_delta},
          {"V_delta", n.v_delta},
          {"vbis_tol", n.vbis_tol},
          {"vbis_demonstrated", n.vbis_demonstrated},
          {"seed", n.seed},
          {"trials", n.trials},
          {"l2_increase_hits", n.hits},
          {"l2_best_increase", io::number(n.best_increase)},
          {"l2_search", n.hits ? "hit" : "inconclusive"}};
}

struct ScenarioResult {
  int exit_code = ExitOk;
  std::string status;  ///< ok | blowup | no_blowup | cert_violation | config_error
  bool exists = false;
  double J_star = std::numeric_limits<double>::quiet_NaN();
  double J0_final = std::numeric_limits<double>::quiet_NaN();
  double decay_rate = std::numeric_limits<double>::quiet_NaN();
  double t_fin = std::numeric_limits<double>::quiet_NaN();
  std::string message;
};

/// Stationary solve, continuum integration, certification and the optional finite-N run,
/// with every artifact written under `out`.
[[nodiscard]] inline ScenarioResult run_scenario(const ExperimentConfig& c, const std::filesystem::path& out,
                                                 std::ostream* log = nullptr) {
  ScenarioResult res;
  std::optional<OscillatorModel> built;
  try {
    built.emplace(c.build_model());
  } catch (const ModelError& e) {
    res.exit_code = ExitConfigError;
    res.status = "config_error";
    res.message = std::string("model: ") + e.what();
    return res;
  } catch (const std::runtime_error& e) {
    res.exit_code = ExitConfigError;
    res.status = "config_error";
    res.message = std::string("model.csv: ") + e.what();
    return res;
  }
  const OscillatorModel& m = *built;
  io::ensure_dir(out);
  io::write_json(out / "resolved_config.json", config_to_json(c));

  std::optional<StationaryState> st;
  io::json stat = stationary_json(m, c.K, &st);
  io::write_json(out / "stationary.json", stat);
  res.exists = st.has_value();
  if (st) {
    res.J_star = st->J_star();
    io::write_density_csv(out / "rho_star.csv", st->sample(c.ntheta), "rho_star");
  }

  DensityField rho0;
  try {
    rho0 = make_initial(c, st);
  } catch (const ConfigError& e) {
    res.exit_code = ExitConfigError;
    res.status = "config_error";
    res.message = e.what();
    return res;
  }
  const auto opt = c.solver_options();
  const ContinuumSolver solver(m, c.K, opt);
  const auto reference = st ? grid_stationary(m, c.K, c.ntheta) : std::nullopt;
  const auto admissible = check_admissibility(rho0, m, c.K, opt);
  const auto trajectory = solver.integrate(rho0, reference);
  if (log)
    *log << "continuum: " << trajectory.steps << " steps in " << trajectory.runtime_seconds << " s"
         << (trajectory.blowup ? ", blow-up at t = " + io::format_double(trajectory.blowup->t_fin) : std::string())
         << '\n';

  io::write_trajectory_csv(out / "trajectory.csv", trajectory.rows);
  for (std::size_t i = 0; i < trajectory.snapshots.size(); ++i) {
    const auto& snap = trajectory.snapshots[i];
    const auto tag = io::time_tag(trajectory.snapshot_requested[i]);
    io::write_density_csv(out / ("density_t" + tag + ".csv"), snap);
    if (c.quantiles && snap.min() > 0.0)
      io::write_quantiles_csv(out / ("quantiles_t" + tag + ".csv"), QuantileProfile(snap), 1025);
  }

  const auto cr = coupling_range(m, c.K);
  std::optional<DecayFit> fit;
  if (reference && !trajectory.blowup && cr.kdz_max < 0.0) {
    fit = fit_decay_rate(trajectory, m, c.K, c.ntheta);
    res.decay_rate = fit->rate;
  }
  std::optional<CertificationReport> cert;
  if (c.certify && reference) {
    cert = certify_theorem_bounds(trajectory, m, c.K, certification_options(c));
    io::write_json(out / "certification.json", certification_json(*cert, fit));
  }
  if (c.negative_controls && reference && cr.kdz_max < 0.0)
    io::write_json(out / "negative_controls.json",
                   negative_controls_json(negative_controls(m, c.K, c.ntheta, c.control_seed)));

  const auto& last = trajectory.rows.back();
  res.J0_final = last.J0;
  io::json summary;
  summary["final"] = {{"t", last.t},           {"J0", io::number(last.J0)}, {"mass", last.mass},
                      {"rho_min", last.rho_min}, {"rho_max", last.rho_max}, {"V", io::number(last.V)},
                      {"q_min", io::number(last.q_min)}};
  summary["steps"] = trajectory.steps;
  summary["max_mass_drift"] = trajectory.max_mass_drift;
  summary["J_star"] = io::number(res.J_star);
  summary["admissibility"] = {{"verdict", to_string(admissible.verdict)}, {"reason", admissible.reason}};
  summary["decay"] = fit ? decay_json(*fit) : io::json(nullptr);
  if (trajectory.blowup) {
    const auto& b = *trajectory.blowup;
    res.t_fin = b.t_fin;
    summary["blowup"] = {{"t_fin", b.t_fin}, {"kind", to_string(b.kind)}, {"witness", b.witness},
                         {"value", io::number(b.value)}, {"threshold", b.threshold}};
  } else {
    summary["blowup"] = nullptr;
  }

  if (trajectory.blowup && !c.expect_blowup) {
    res.exit_code = ExitUnexpectedBlowup;
    res.status = "blowup";
  } else if (!trajectory.blowup && c.expect_blowup) {
    res.exit_code = ExitUnexpectedBlowup;
    res.status = "no_blowup";
  } else if (cert && !cert->passed) {
    res.exit_code = ExitCertificationViolation;
    res.status = "cert_violation";
  } else {
    res.status = trajectory.blowup ? "blowup" : "ok";
  }

  if (c.finite) {
    const auto fr = run_finite(m, c.K, c.N, c.seed, c.nfirings);
    summary["finite"] = write_finite_outputs(out / "finite", fr, c.K, c.N, c.seed);
  }
  summary["status"] = res.status;
  summary["exit_code"] = res.exit_code;
  io::write_json(out / "summary.json", summary);
  return res;
}

/// Loads a config file and runs it; config problems map to exit code 4.
[[nodiscard]] inline ScenarioResult run_scenario_file(const std::filesystem::path& path,
                                                      const std::optional<std::filesystem::path>& out_override = {},
                                                      std::ostream* log = nullptr) {
  ExperimentConfig c;
  try {
    c = load_config(path);
  } catch (const ConfigError& e) {
    ScenarioResult r;
    r.exit_code = ExitConfigError;
    r.status = "config_error";
    r.message = e.what();
    return r;
  }
  std::filesystem::path out = out_override ? *out_override : std::filesystem::path(c.out_dir);
  return run_scenario(c, out, log);
}

// ---------------------------------------------------------------------------------------------
// sweeps

struct SweepRow {
  double value = 0.0;
  bool exists = false;
  double J_star = std::numeric_limits<double>::quiet_NaN();
  double decay_rate = std::numeric_limits<double>::quiet_NaN();
  double t_fin = std::numeric_limits<double>::quiet_NaN();
  double J0_final = std::numeric_limits<double>::quiet_NaN();
  std::string status;
};

[[nodiscard]] inline std::string sweep_key(const std::string& param) {
  if (param == "K") return "coupling.K";
  if (param == "ntheta" || param == "N_theta") return "solver.ntheta";
  if (param == "epsilon") return "initial.epsilon";
  throw ConfigError("sweep.param", "expected K, ntheta or epsilon, got '" + param + "'");
}

/// One row per value, each in its own row_<i> directory; rows run concurrently up to the
/// worker cap. With `stationary_only` only the existence check and J* are computed.
[[nodiscard]] inline std::vector<SweepRow> sweep(const ExperimentConfig& base, const std::string& param,
                                                 const std::vector<double>& values, const std::filesystem::path& out,
                                                 bool stationary_only = false, std::size_t threads = 0) {
  const std::string key = sweep_key(param);
  std::vector<ExperimentConfig> configs;
  for (double v : values) {
    ExperimentConfig c = base;
    set_config_value(c, key, io::format_double(v));
    validate_config(c);
    configs.push_back(std::move(c));
  }
  io::ensure_dir(out);
  std::vector<SweepRow> rows(values.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      const auto& c = configs[i];
      SweepRow& r = rows[i];
      r.value = values[i];
      try {
        if (stationary_only) {
          const auto m = c.build_model();
          std::optional<StationaryState> st;
          const auto dir = out / ("row_" + std::to_string(i));
          io::ensure_dir(dir);
          io::write_json(dir / "stationary.json", stationary_json(m, c.K, &st));
          r.exists = st.has_value();
          if (st) r.J_star = st->J_star();
          r.status = "ok";
        } else {
          const auto s = run_scenario(c, out / ("row_" + std::to_string(i)));
          r.exists = s.exists;
          r.J_star = s.J_star;
          r.decay_rate = s.decay_rate;
          r.t_fin = s.t_fin;
          r.J0_final = s.J0_final;
          r.status = s.status;
        }
      } catch (const std::exception&) {
        r.status = "error";
      }
    }
  };
  std::size_t n = threads ? threads : worker_count();
  n = std::min(n, std::max<std::size_t>(1, configs.size()));
  std::vector<std::thread> pool;
  for (std::size_t k = 1; k < n; ++k) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  io::CsvWriter w(out / "sweep.csv", {"value", "exists", "J_star", "decay_rate", "t_fin", "status"});
  for (const auto& r : rows) {
    w.cell(r.value).cell(std::string(r.exists ? "true" : "false")).cell(r.J_star).cell(r.decay_rate).cell(r.t_fin).cell(r.status);
    w.end_row();
  }
  return rows;
}

}  // namespace pulsefield
