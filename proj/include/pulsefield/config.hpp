#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "continuum.hpp"
#include "errors.hpp"
#include "io.hpp"
#include "oscillator.hpp"

namespace pulsefield {

// Experiment files are line-oriented:
//
//   # comment
//   [model]
//   model = lif
//   S = 2.1
//
// Every key has a default; unknown sections or keys and malformed values are rejected with
// the offending "section.key" path.

struct ModelConfig {
  std::string kind = "lif";  ///< lif | tabulated | homoclinic
  double S = 2.1, gamma = 2.0, x_lo = 0.0, x_hi = 1.0;
  std::string csv;
  double C = 0.1, lambda_u = 1.0, omega = two_pi;
};

struct InitialConfig {
  std::string type = "uniform";  ///< uniform | vonmises | perturbed
  double kappa = 2.0, mu = numerics::pi, epsilon = 0.2;
};

struct ExperimentConfig {
  ModelConfig model;
  double K = -0.1;
  std::string scheme = "upwind";
  std::size_t ntheta = 2048;
  double cfl = 0.5, tmax = 40.0, eps_sing = default_eps_sing, flux_cap = 0.0;
  std::size_t log_stride = 200;
  InitialConfig initial;
  std::string out_dir = "out";
  std::vector<double> snapshot_times;
  bool quantiles = false;
  bool certify = true;
  double tol_abs = 1e-4, tol_rel = 0.1;
  bool negative_controls = false;
  std::uint64_t control_seed = 12345;
  bool expect_blowup = false;
  bool finite = false;
  std::size_t N = 100;
  std::uint64_t seed = 1;
  std::size_t nfirings = 2000;
  std::filesystem::path base_dir;  ///< relative paths (model CSV) resolve against this

  [[nodiscard]] Scheme scheme_enum() const { return scheme == "semilagrangian" ? Scheme::SemiLagrangian : Scheme::Upwind; }

  [[nodiscard]] SolverOptions solver_options() const {
    SolverOptions o;
    o.scheme = scheme_enum();
    o.n_theta = ntheta;
    o.cfl = cfl;
    o.t_max = tmax;
    o.eps_sing = eps_sing;
    o.flux_cap = flux_cap;
    o.log_stride = log_stride;
    o.snapshot_times = snapshot_times;
    return o;
  }

  [[nodiscard]] OscillatorModel build_model() const {
    if (model.kind == "lif") return OscillatorModel::lif(model.S, model.gamma, model.x_lo, model.x_hi);
    if (model.kind == "homoclinic") return OscillatorModel::homoclinic(model.C, model.lambda_u, model.omega);
    std::filesystem::path p(model.csv);
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    return OscillatorModel::from_csv(p.string());
  }
};

namespace detail {

inline std::string trim(std::string s) {
  auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
  return s;
}

inline double to_number(const std::string& key, const std::string& v) {
  try {
    const double d = io::parse_double(v);
    if (!std::isfinite(d)) throw ConfigError(key, "value must be finite");
    return d;
  } catch (const std::invalid_argument&) {
    throw ConfigError(key, "expected a number, got '" + v + "'");
  }
}

inline std::uint64_t to_count(const std::string& key, const std::string& v, std::uint64_t min = 0) {
  std::uint64_t n = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), n);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ConfigError(key, "expected a non-negative integer, got '" + v + "'");
  if (n < min) throw ConfigError(key, "must be at least " + std::to_string(min));
  return n;
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  throw ConfigError(key, "expected true or false, got '" + v + "'");
}

inline std::string to_choice(const std::string& key, const std::string& v, std::initializer_list<const char*> allowed) {
  for (const char* a : allowed)
    if (v == a) return v;
  std::string list;
  for (const char* a : allowed) list += (list.empty() ? "" : "|") + std::string(a);
  throw ConfigError(key, "expected one of " + list + ", got '" + v + "'");
}

inline std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  if (trim(v).empty()) return out;
  for (const auto& part : io::split(v)) out.push_back(to_number(key, trim(part)));
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)>;

inline const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto num = [&](const char* k, double ExperimentConfig::*f) {
      t[k] = [f](ExperimentConfig& c, const std::string& key, const std::string& v) { c.*f = to_number(key, v); };
    };
    auto mnum = [&](const char* k, double ModelConfig::*f) {
      t[k] = [f](ExperimentConfig& c, const std::string& key, const std::string& v) { c.model.*f = to_number(key, v); };
    };
    auto inum = [&](const char* k, double InitialConfig::*f) {
      t[k] = [f](ExperimentConfig& c, const std::string& key, const std::string& v) { c.initial.*f = to_number(key, v); };
    };
    auto flag = [&](const char* k, bool ExperimentConfig::*f) {
      t[k] = [f](ExperimentConfig& c, const std::string& key, const std::string& v) { c.*f = to_bool(key, v); };
    };
    t["model.model"] = [](ExperimentConfig& c, const std::string& key, const std::string& v) {
      c.model.kind = to_choice(key, v, {"lif", "tabulated", "homoclinic"});
    };
    mnum("model.S", &ModelConfig::S);
    mnum("model.gamma", &ModelConfig::gamma);
    mnum("model.x_lo", &ModelConfig::x_lo);
    mnum("model.x_hi", &ModelConfig::x_hi);
    mnum("model.C", &ModelConfig::C);
    mnum("model.lambda_u", &ModelConfig::lambda_u);
    mnum("model.omega", &ModelConfig::omega);
    t["model.csv"] = [](ExperimentConfig& c, const std::string&, const std::string& v) { c.model.csv = v; };
    num("coupling.K", &ExperimentConfig::K);
    t["solver.scheme"] = [](ExperimentConfig& c, const std::string& key, const std::string& v) {
      c.scheme = to_choice(key, v, {"upwind", "semilagrangian"});
    };
    t["solver.ntheta"] = [](ExperimentConfig& c, const std::string& key, const std::string& v) {
      c.ntheta = to_count(key, v, 8);
    };
    num("solver.cfl", &ExperimentConfig::cfl);
    num("solver.tmax", &ExperimentConfig::tmax);
    num("solver.eps_sing", &ExperimentConfig::eps_sing);
    num("solver.flux_cap", &ExperimentConfig::flux_cap);
    t["solver.log_stride"] = [](ExperimentConfig& c, const std::string& key, const std::string& v) {
      c.log_stride = to_count(key, v, 1);
    };
    t["initial.type"] = [](ExperimentConfig& c, const std::string& key, const std::string& v) {
      c.initial.type = to_choice(key, v, {"uniform", "vonmises", "perturbed"});
    };
    inum("initial.kappa", &InitialConfig::kappa);
    inum("initial.mu", &InitialConfig::mu);
    inum("initial.epsilon", &InitialConfig::epsilon);
    t["output.dir"] = [](ExperimentConfig& c, const std::string&, const std::string& v) { c.out_dir = v; };
    t["output.snapshot_times"] = [](ExperimentConfig& c, const std::string& key, const std::string& v) {
      c.snapshot_times = to_list(key, v);
    };
    flag("output.quantiles", &ExperimentConfig::quantiles);
    flag("certify.enabled", &ExperimentConfig::certify);
    num("certify.tol_abs", &ExperimentConfig::tol_abs);
    num("certify.tol_rel", &ExperimentConfig::tol_rel);
    flag("certify.negative_controls", &ExperimentConfig::negative_controls);
    t["certify.seed"] = [](ExperimentConfig& c, const std::string& key, const std::string& v) {
      c.control_seed = to_count(key, v);
    };
    flag("expect.blowup", &ExperimentConfig::expect_blowup);
    flag("finite.enabled", &ExperimentConfig::finite);
    t["finite.N"] = [](ExperimentConfig& c, const std::string& key, const std::string& v) { c.N = to_count(key, v, 1); };
    t["finite.seed"] = [](ExperimentConfig& c, const std::string& key, const std::string& v) { c.seed = to_count(key, v); };
    t["finite.nfirings"] = [](ExperimentConfig& c, const std::string& key, const std::string& v) {
      c.nfirings = to_count(key, v);
    };
    return t;
  }();
  return table;
}

}  // namespace detail

/// Applies one "section.key = value" assignment.
inline void set_config_value(ExperimentConfig& c, const std::string& key, const std::string& value) {
  const auto& t = detail::setters();
  auto it = t.find(key);
  if (it == t.end()) {
    const auto dot = key.find('.');
    const std::string section = key.substr(0, dot);
    const bool known = std::any_of(t.begin(), t.end(), [&](const auto& kv) { return kv.first.rfind(section + ".", 0) == 0; });
    throw ConfigError(key, known ? "unknown key" : "unknown section [" + section + "]");
  }
  it->second(c, key, detail::trim(value));
}

/// Cross-field checks that single assignments cannot see.
inline void validate_config(const ExperimentConfig& c) {
  if (!(c.cfl > 0.0)) throw ConfigError("solver.cfl", "must be positive");
  if (!(c.tmax > 0.0)) throw ConfigError("solver.tmax", "must be positive");
  if (!(c.eps_sing > 0.0)) throw ConfigError("solver.eps_sing", "must be positive");
  if (c.flux_cap < 0.0) throw ConfigError("solver.flux_cap", "must be non-negative (0 selects the default)");
  if (!(c.model.x_hi > c.model.x_lo)) throw ConfigError("model.x_hi", "must exceed x_lo");
  if (c.model.kind == "tabulated" && c.model.csv.empty()) throw ConfigError("model.csv", "required for tabulated models");
  if (c.model.kind == "homoclinic" && c.finite) throw ConfigError("finite.enabled", "finite populations need a vector field");
  if (c.initial.type == "vonmises" && c.initial.kappa < 0.0) throw ConfigError("initial.kappa", "must be non-negative");
  if (c.tol_abs < 0.0) throw ConfigError("certify.tol_abs", "must be non-negative");
  if (c.tol_rel < 0.0) throw ConfigError("certify.tol_rel", "must be non-negative");
  for (double t : c.snapshot_times)
    if (t < 0.0) throw ConfigError("output.snapshot_times", "times must be non-negative");
}

[[nodiscard]] inline ExperimentConfig parse_config_text(const std::string& text,
                                                        const std::filesystem::path& base_dir = {}) {
  ExperimentConfig c;
  c.base_dir = base_dir;
  std::istringstream in(text);
  std::string line, section;
  std::set<std::string> seen;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno), "unterminated section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError((section.empty() ? "" : section + ".") + line, "expected 'key = value'");
    const std::string name = detail::trim(line.substr(0, eq));
    if (section.empty()) throw ConfigError(name, "key outside any section");
    const std::string key = section + "." + name;
    if (!seen.insert(key).second) throw ConfigError(key, "duplicate key");
    set_config_value(c, key, line.substr(eq + 1));
  }
  validate_config(c);
  return c;
}

/// Every key with its resolved value, grouped by section.
[[nodiscard]] inline io::json config_to_json(const ExperimentConfig& c) {
  io::json j;
  j["model"] = {{"model", c.model.kind}, {"S", c.model.S},       {"gamma", c.model.gamma},
                {"x_lo", c.model.x_lo},  {"x_hi", c.model.x_hi}, {"csv", c.model.csv},
                {"C", c.model.C},        {"lambda_u", c.model.lambda_u}, {"omega", c.model.omega}};
  j["coupling"] = {{"K", c.K}};
  j["solver"] = {{"scheme", c.scheme},     {"ntheta", c.ntheta},     {"cfl", c.cfl},
                 {"tmax", c.tmax},         {"eps_sing", c.eps_sing}, {"flux_cap", c.flux_cap},
                 {"log_stride", c.log_stride}};
  j["initial"] = {{"type", c.initial.type}, {"kappa", c.initial.kappa}, {"mu", c.initial.mu},
                  {"epsilon", c.initial.epsilon}};
  j["output"] = {{"dir", c.out_dir}, {"snapshot_times", c.snapshot_times}, {"quantiles", c.quantiles}};
  j["certify"] = {{"enabled", c.certify},
                  {"tol_abs", c.tol_abs},
                  {"tol_rel", c.tol_rel},
                  {"negative_controls", c.negative_controls},
                  {"seed", c.control_seed}};
  j["expect"] = {{"blowup", c.expect_blowup}};
  j["finite"] = {{"enabled", c.finite}, {"N", c.N}, {"seed", c.seed}, {"nfirings", c.nfirings}};
  return j;
}

/// Reads a resolved_config.json back through the same validation as the text format.
[[nodiscard]] inline ExperimentConfig config_from_json(const io::json& j, const std::filesystem::path& base_dir = {}) {
  ExperimentConfig c;
  c.base_dir = base_dir;
  if (!j.is_object()) throw ConfigError("<root>", "expected a JSON object");
  for (const auto& [section, body] : j.items()) {
    if (!body.is_object()) throw ConfigError(section, "expected a section object");
    for (const auto& [name, value] : body.items()) {
      const std::string key = section + "." + name;
      std::string text;
      if (value.is_string()) {
        text = value.get<std::string>();
      } else if (value.is_boolean()) {
        text = value.get<bool>() ? "true" : "false";
      } else if (value.is_number_unsigned() || value.is_number_integer()) {
        text = value.dump();
      } else if (value.is_number()) {
        text = io::format_double(value.get<double>());
      } else if (value.is_array()) {
        for (const auto& e : value) {
          if (!e.is_number()) throw ConfigError(key, "expected a list of numbers");
          text += (text.empty() ? "" : ",") + io::format_double(e.get<double>());
        }
      } else {
        throw ConfigError(key, "unsupported value type");
      }
      set_config_value(c, key, text);
    }
  }
  validate_config(c);
  return c;
}

/// Loads a text config, or a resolved_config.json when the extension is .json.
[[nodiscard]] inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot read config file");
  const auto base = path.parent_path();
  if (path.extension() == ".json") {
    io::json j;
    try {
      j = io::json::parse(in);
    } catch (const io::json::parse_error& e) {
      throw ConfigError(path.string(), e.what());
    }
    return config_from_json(j, base);
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), base);
}

}  // namespace pulsefield
