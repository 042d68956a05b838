#pragma once

#include <stdexcept>
#include <string>

namespace bcw {

/// Mismatched domains / array arities between operands.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Bad configuration input (parse failure or failed validation).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Picard iteration exceeded max_iter without meeting tolerance.
struct DivergedError : std::runtime_error {
  double last_residual;
  explicit DivergedError(const std::string& msg, double residual)
      : std::runtime_error(msg), last_residual(residual) {}
};

/// The quasilinear coefficient 1 + 2 sigma psi_t lost positivity somewhere
/// on the collocation grid; the evolution left the regime where the
/// potential-form equation is non-degenerate.
struct DegenerateError : std::runtime_error {
  double margin;
  explicit DegenerateError(const std::string& msg, double m)
      : std::runtime_error(msg), margin(m) {}
};

/// Reference integrator exceeded the growth guard (step size too large for
/// the stiffest retained mode).
struct StabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Not enough usable samples for a least-squares decay fit.
struct InsufficientDataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace bcw
