#pragma once

#include <cmath>
#include <optional>

#include "bcw/errors.hpp"

namespace bcw {

/// Medium coefficients of the damped wave model in abbreviated form:
///   a     thermal coefficient (kinematic viscosity over Prandtl number)
///   b     diffusivity of sound (strong damping); b > 0 is a standing
///         assumption — it is what makes the generator analytic
///   c     small-signal sound speed
///   sigma nonlinearity coefficient (1 + B/2A)/c^2; 0 switches the
///         quadratic term off
struct MediumParams {
  double a = 1.0;
  double b = 1.0;
  double c = 1.0;
  double sigma = 0.0;
};

inline MediumParams make_medium(double a, double b, double c, double sigma = 0.0) {
  if (!(a > 0.0)) throw ConfigError("medium: a must be positive");
  if (!(b > 0.0))
    throw ConfigError(
        "medium: b must be positive (the strong-damping assumption b > 0)");
  if (!(c > 0.0)) throw ConfigError("medium: c must be positive");
  if (!(sigma >= 0.0)) throw ConfigError("medium: sigma must be nonnegative");
  return MediumParams{a, b, c, sigma};
}

/// Consistency helpers for configs that state the physical provenance
/// (viscosity/Prandtl for a, the B/A ratio for sigma) alongside the
/// abbreviated coefficients.
inline double a_from_provenance(double nu, double prandtl) {
  if (!(prandtl > 0.0)) throw ConfigError("medium: prandtl must be positive");
  return nu / prandtl;
}

inline double sigma_from_provenance(double b_over_a_ratio, double c) {
  return (1.0 + 0.5 * b_over_a_ratio) / (c * c);
}

}  // namespace bcw
