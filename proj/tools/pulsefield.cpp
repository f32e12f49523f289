// Command-line front end: stationary, simulate, certify, finite, run, sweep.

#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <pulsefield/pulsefield.hpp>

namespace pf = pulsefield;

namespace {

/// Flags that map one-to-one onto config keys.
class KeyFlags {
 public:
  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    auto& slot = values_[key];
    options_.emplace_back(app->add_option(flag, slot, help), key);
  }

  void add_model(CLI::App* app) {
    add(app, "--model", "model.model", "lif | tabulated | homoclinic");
    add(app, "--S", "model.S", "LIF drive");
    add(app, "--gamma", "model.gamma", "LIF leak");
    add(app, "--x-lo", "model.x_lo", "reset state");
    add(app, "--x-hi", "model.x_hi", "threshold state");
    add(app, "--csv", "model.csv", "tabulated field, header x,F");
    add(app, "--C", "model.C", "homoclinic amplitude");
    add(app, "--lambda-u", "model.lambda_u", "homoclinic unstable eigenvalue");
    add(app, "--omega", "model.omega", "homoclinic frequency");
  }

  void apply(pf::ExperimentConfig& c) const {
    for (const auto& [opt, key] : options_)
      if (opt->count() > 0) pf::set_config_value(c, key, values_.at(key));
    pf::validate_config(c);
  }

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::pair<CLI::Option*, std::string>> options_;
};

int report(const pf::ScenarioResult& r) {
  if (!r.message.empty()) std::cerr << "pulsefield: " << r.message << '\n';
  std::cout << "status: " << r.status << '\n';
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuum and finite populations of pulse-coupled integrate-and-fire oscillators"};
  app.require_subcommand(1);

  // stationary
  auto* stationary = app.add_subcommand("stationary", "Stationary flux, existence and coupling bounds as JSON");
  KeyFlags stationary_flags;
  stationary_flags.add_model(stationary);
  stationary_flags.add(stationary, "--K", "coupling.K", "coupling strength");
  stationary_flags.add(stationary, "--ntheta", "solver.ntheta", "cells for the rho* dump");
  std::string rho_csv;
  stationary->add_option("--rho-csv", rho_csv, "write theta,rho_star to this file");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Integrate the continuum transport equation");
  KeyFlags simulate_flags;
  simulate_flags.add_model(simulate);
  simulate_flags.add(simulate, "--K", "coupling.K", "coupling strength");
  simulate_flags.add(simulate, "--ntheta", "solver.ntheta", "grid cells");
  simulate_flags.add(simulate, "--cfl", "solver.cfl", "Courant number");
  simulate_flags.add(simulate, "--scheme", "solver.scheme", "upwind | semilagrangian");
  simulate_flags.add(simulate, "--tmax", "solver.tmax", "final time");
  simulate_flags.add(simulate, "--log-stride", "solver.log_stride", "steps between log rows");
  simulate_flags.add(simulate, "--eps-sing", "solver.eps_sing", "singularity threshold");
  simulate_flags.add(simulate, "--ic", "initial.type", "uniform | vonmises | perturbed");
  simulate_flags.add(simulate, "--kappa", "initial.kappa", "von Mises concentration");
  simulate_flags.add(simulate, "--mu", "initial.mu", "von Mises centre");
  simulate_flags.add(simulate, "--epsilon", "initial.epsilon", "perturbation amplitude");
  simulate_flags.add(simulate, "--snapshots", "output.snapshot_times", "comma-separated snapshot times");
  simulate_flags.add(simulate, "--expect-blowup", "expect.blowup", "true when a blow-up is the expected outcome");
  std::string simulate_out = "out";
  simulate->add_option("--out", simulate_out, "output directory");

  // certify
  auto* certify = app.add_subcommand("certify", "Check logged Lyapunov decay against the theorem bounds");
  KeyFlags certify_flags;
  certify_flags.add_model(certify);
  certify_flags.add(certify, "--K", "coupling.K", "coupling strength");
  certify_flags.add(certify, "--ntheta", "solver.ntheta", "cells of the run that produced the trajectory");
  certify_flags.add(certify, "--tol-abs", "certify.tol_abs", "absolute slack");
  certify_flags.add(certify, "--tol-rel", "certify.tol_rel", "relative slack");
  std::string trajectory_path, certify_out = ".";
  std::vector<std::string> density_files;
  certify->add_option("--trajectory", trajectory_path, "trajectory.csv")->required()->check(CLI::ExistingFile);
  certify->add_option("--density", density_files, "density_t*.csv files to convert to quantiles_t*.csv")
      ->check(CLI::ExistingFile);
  certify->add_option("--out", certify_out, "output directory");

  // finite
  auto* finite = app.add_subcommand("finite", "Event-driven finite population");
  KeyFlags finite_flags;
  finite_flags.add_model(finite);
  finite_flags.add(finite, "--K", "coupling.K", "coupling strength");
  finite_flags.add(finite, "--N", "finite.N", "population size");
  finite_flags.add(finite, "--seed", "finite.seed", "initial-state seed");
  finite_flags.add(finite, "--nfirings", "finite.nfirings", "number of firing events");
  std::string finite_out = "out";
  finite->add_option("--out", finite_out, "output directory");

  // run
  auto* run = app.add_subcommand("run", "Run an experiment config");
  std::string config_path, run_out;
  run->add_option("config", config_path, "config file (.cfg or resolved_config.json)")->required();
  run->add_option("--out", run_out, "override output.dir");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Sweep K, ntheta or epsilon");
  std::string sweep_config, sweep_param = "K", sweep_out = "sweep_out";
  std::vector<double> sweep_values;
  bool stationary_only = false;
  std::size_t threads = 0;
  sweep->add_option("--config", sweep_config, "base config (defaults when omitted)");
  sweep->add_option("--param", sweep_param, "K | ntheta | epsilon");
  sweep->add_option("--values", sweep_values, "comma-separated values")->delimiter(',')->expected(0, -1);
  sweep->add_option("--out", sweep_out, "output directory");
  sweep->add_flag("--stationary-only", stationary_only, "only existence and J*");
  sweep->add_option("--threads", threads, "worker cap (default PULSEFIELD_THREADS or all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    pf::ExperimentConfig cfg;
    if (*stationary) {
      stationary_flags.apply(cfg);
      const auto m = cfg.build_model();
      std::optional<pf::StationaryState> st;
      const auto j = pf::stationary_json(m, cfg.K, &st);
      std::cout << j.dump(2) << '\n';
      if (!rho_csv.empty() && st) pf::io::write_density_csv(rho_csv, st->sample(cfg.ntheta), "rho_star");
      return pf::ExitOk;
    }
    if (*simulate) {
      simulate_flags.apply(cfg);
      cfg.certify = false;
      return report(pf::run_scenario(cfg, simulate_out, &std::cerr));
    }
    if (*certify) {
      certify_flags.apply(cfg);
      const auto m = cfg.build_model();
      const auto rows = pf::io::read_trajectory_csv(trajectory_path);
      pf::io::ensure_dir(certify_out);
      const auto cr = pf::coupling_range(m, cfg.K);
      const auto ref = pf::grid_stationary(m, cfg.K, cfg.ntheta);
      const double q_star_min = ref ? pf::QuantileProfile(*ref).q_min() : std::numeric_limits<double>::quiet_NaN();
      const auto rep = pf::certify_theorem_bounds(rows, cr.kdz_min, cr.kdz_max,
                                                  !m.classification().curvature.mixed() || cfg.K == 0.0, q_star_min,
                                                  pf::certification_options(cfg));
      std::optional<pf::DecayFit> fit;
      if (cr.kdz_max < 0.0 && !rows.empty()) {
        std::vector<pf::HistoryPoint> hist;
        for (const auto& r : rows) hist.push_back({r.t, r.J0, 0.0, 0.0});
        const auto win = pf::first_crossing_window(pf::PrcTable(m, cfg.ntheta), m.omega(), cfg.K, hist);
        fit = pf::fit_decay_rate(rows, win.J_min, win.J_max, cr.kdz_min, cr.kdz_max);
      }
      const auto j = pf::certification_json(rep, fit);
      pf::io::write_json(std::filesystem::path(certify_out) / "certification.json", j);
      for (const auto& f : density_files) {
        const auto d = pf::io::read_density_csv(f);
        auto name = std::filesystem::path(f).filename().string();
        if (name.rfind("density_", 0) == 0) name = "quantiles_" + name.substr(8);
        else name = "quantiles_" + name;
        pf::io::write_quantiles_csv(std::filesystem::path(certify_out) / name, pf::QuantileProfile(d), 1025);
      }
      std::cout << j.dump(2) << '\n';
      return rep.passed ? pf::ExitOk : pf::ExitCertificationViolation;
    }
    if (*finite) {
      finite_flags.apply(cfg);
      const auto m = cfg.build_model();
      const auto rep = pf::run_finite(m, cfg.K, cfg.N, cfg.seed, cfg.nfirings);
      std::cout << pf::write_finite_outputs(finite_out, rep, cfg.K, cfg.N, cfg.seed).dump(2) << '\n';
      return pf::ExitOk;
    }
    if (*run) {
      std::optional<std::filesystem::path> out;
      if (!run_out.empty()) out = run_out;
      return report(pf::run_scenario_file(config_path, out, &std::cerr));
    }
    if (*sweep) {
      if (!sweep_config.empty()) cfg = pf::load_config(sweep_config);
      const auto rows = pf::sweep(cfg, sweep_param, sweep_values, sweep_out, stationary_only, threads);
      std::cout << "value,exists,J_star,decay_rate,t_fin,status\n";
      for (const auto& r : rows)
        std::cout << pf::io::format_double(r.value) << ',' << (r.exists ? "true" : "false") << ','
                  << pf::io::format_double(r.J_star) << ',' << pf::io::format_double(r.decay_rate) << ','
                  << pf::io::format_double(r.t_fin) << ',' << r.status << '\n';
      return pf::ExitOk;
    }
  } catch (const pf::ConfigError& e) {
    std::cerr << "pulsefield: config error: " << e.what() << '\n';
    return pf::ExitConfigError;
  } catch (const pf::ModelError& e) {
    std::cerr << "pulsefield: model error: " << e.what() << '\n';
    return pf::ExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "pulsefield: " << e.what() << '\n';
    return 1;
  }
  return pf::ExitOk;
}
