#pragma once

#include <stdexcept>

namespace epr {

// A config file could not be read, parsed, or validated.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The instance cannot be solved as posed (e.g. m exceeds the alphabet size,
// or an exhaustive search would exceed its safety budget).
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A numerical routine failed: solver non-convergence, degenerate model, ...
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace epr
