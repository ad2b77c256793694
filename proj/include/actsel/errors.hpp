#pragma once

#include <stdexcept>
#include <string>

namespace actsel {

/// Numerical breakdown: a factorization failed or an iteration did not converge.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user-facing configuration (shapes, parameters, files).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Epoch schedule cannot be built, e.g. T <= tau1 * p.
class InfeasibleSchedule : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace actsel
