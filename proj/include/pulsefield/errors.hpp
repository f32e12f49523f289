#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace pulsefield {

/// Argument outside the domain of a map (state, phase or flux out of range).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Rejected model construction: non-positive field, bad parameters, bad table.
class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Operation not defined for this model kind (e.g. a state map on a pure PRC model).
class UnsupportedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Time step exceeds the CFL bound of the transport scheme.
class CflViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// No asynchronous stationary state for the requested coupling.
class NoStationaryState : public std::runtime_error {
 public:
  NoStationaryState(const std::string& condition, double limit)
      : std::runtime_error("no stationary state: " + condition), condition_(condition), limit_(limit) {}

  const std::string& condition() const noexcept { return condition_; }
  /// Value of the existence integral limit (must exceed 1 for existence).
  double limit() const noexcept { return limit_; }

 private:
  std::string condition_;
  double limit_;
};

/// Density vanishes somewhere, so the quantile density is unbounded.
class QuantileDegenerate : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Experiment configuration rejected; `key_path()` names the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key_path, const std::string& message)
      : std::runtime_error(key_path.empty() ? message : key_path + ": " + message),
        key_path_(std::move(key_path)) {}

  const std::string& key_path() const noexcept { return key_path_; }

 private:
  std::string key_path_;
};

}  // namespace pulsefield
