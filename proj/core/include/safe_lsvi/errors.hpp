#pragma once

#include <stdexcept>
#include <string>

namespace safe_lsvi {

/// Caller broke a documented precondition (bad index, mismatched dimension, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A factorization failed or a system was too ill-conditioned to trust.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double condition_estimate)
      : std::runtime_error(what), condition_estimate_(condition_estimate) {}

  double condition_estimate() const noexcept { return condition_estimate_; }

 private:
  double condition_estimate_;
};

/// Parameters cannot be turned into a runnable configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Internal state contradicts an invariant the algorithm relies on
/// (empty safe set, closure broken, ...). Aborts a run.
class ConsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An instance generator could not satisfy its constraints within its retry budget.
class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace safe_lsvi
