#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace sgame {

// Shape mismatch between two vectors/tables that must agree.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// NaN/Inf escaped into a public value. Callers treat this as fatal for the run.
struct NumericsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Operation not provided by this family/configuration.
struct UnsupportedError : std::logic_error {
  using std::logic_error::logic_error;
};

struct EnvError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) {
    throw NumericsError(std::string("non-finite value in ") + what);
  }
}

inline void require(bool cond, const char* what) {
  if (!cond) throw DimensionError(what);
}

}  // namespace sgame
