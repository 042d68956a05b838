#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "bcw/errors.hpp"

namespace bcw {

inline constexpr double pi = 3.14159265358979323846;

/// Rectangular box (0,L1) x ... x (0,Ld) with homogeneous Dirichlet walls,
/// discretised by a sine-Galerkin basis with N_i modes per axis.
struct BoxDomain {
  int dims = 1;
  std::array<double, 3> lengths{0.0, 0.0, 0.0};
  std::array<int, 3> modes_per_dim{0, 0, 0};

  static BoxDomain make(const std::vector<double>& L, const std::vector<int>& N) {
    if (L.size() != N.size())
      throw ShapeError("BoxDomain: lengths and modes_per_dim must have equal arity");
    if (L.empty() || L.size() > 3)
      throw ShapeError("BoxDomain: dimension must be 1, 2 or 3");
    BoxDomain d;
    d.dims = static_cast<int>(L.size());
    for (int i = 0; i < d.dims; ++i) {
      if (!(L[i] > 0.0))
        throw ShapeError("BoxDomain: edge lengths must be positive");
      if (N[i] < 1)
        throw ShapeError("BoxDomain: need at least one mode per axis");
      d.lengths[i] = L[i];
      d.modes_per_dim[i] = N[i];
    }
    return d;
  }

  std::size_t mode_count() const {
    std::size_t n = 1;
    for (int i = 0; i < dims; ++i) n *= static_cast<std::size_t>(modes_per_dim[i]);
    return n;
  }

  double volume() const {
    double v = 1.0;
    for (int i = 0; i < dims; ++i) v *= lengths[i];
    return v;
  }

  /// Parseval weight: integral of a product of unit sine basis functions,
  /// i.e. prod_i (L_i / 2).
  double volume_factor() const {
    double v = volume();
    for (int i = 0; i < dims; ++i) v *= 0.5;
    return v;
  }

  bool operator==(const BoxDomain&) const = default;
};

/// Dirichlet Laplacian eigenvalue mu_k = sum_i (pi k_i / L_i)^2 for the
/// separable eigenfunction prod_i sin(pi k_i x_i / L_i). Multi-indices are
/// 1-based; entries beyond `dims` are ignored.
inline double laplacian_eigenvalue(const BoxDomain& d, const std::array<int, 3>& k) {
  double mu = 0.0;
  for (int i = 0; i < d.dims; ++i) {
    if (k[i] < 1 || k[i] > d.modes_per_dim[i])
      throw std::domain_error("laplacian_eigenvalue: k[" + std::to_string(i) +
                              "]=" + std::to_string(k[i]) + " outside 1.." +
                              std::to_string(d.modes_per_dim[i]));
    const double kappa = pi * k[i] / d.lengths[i];
    mu += kappa * kappa;
  }
  return mu;
}

/// One retained basis mode: its multi-index, eigenvalue and position in the
/// row-major tensor layout (k1 slowest, kd fastest; 0-based).
struct Mode {
  std::array<int, 3> k{0, 0, 0};
  double mu = 0.0;
  std::size_t flat = 0;
};

/// All retained modes sorted by eigenvalue ascending, ties broken
/// lexicographically on the multi-index. The first entry carries the
/// smallest eigenvalue mu_min of the truncated operator.
inline std::vector<Mode> enumerate_modes(const BoxDomain& d) {
  std::vector<Mode> modes;
  modes.reserve(d.mode_count());
  const int n1 = d.modes_per_dim[0];
  const int n2 = d.dims > 1 ? d.modes_per_dim[1] : 1;
  const int n3 = d.dims > 2 ? d.modes_per_dim[2] : 1;
  for (int k1 = 1; k1 <= n1; ++k1)
    for (int k2 = 1; k2 <= n2; ++k2)
      for (int k3 = 1; k3 <= n3; ++k3) {
        Mode m;
        m.k = {k1, d.dims > 1 ? k2 : 0, d.dims > 2 ? k3 : 0};
        m.flat = (static_cast<std::size_t>(k1 - 1) * n2 + (k2 - 1)) * n3 + (k3 - 1);
        m.mu = laplacian_eigenvalue(d, {k1, k2, k3});
        modes.push_back(m);
      }
  std::sort(modes.begin(), modes.end(), [](const Mode& a, const Mode& b) {
    if (a.mu != b.mu) return a.mu < b.mu;
    return a.k < b.k;
  });
  return modes;
}

/// Coefficients against the sine basis, stored in enumeration order
/// (eigenvalue ascending; see enumerate_modes).
struct SpectralField {
  BoxDomain domain;
  std::vector<double> coeff;

  SpectralField() = default;
  explicit SpectralField(const BoxDomain& d) : domain(d), coeff(d.mode_count(), 0.0) {}
};

/// Point values on the interior collocation grid x_j = j L/(N+1),
/// j = 1..N per axis, row-major (last axis fastest).
struct PhysicalField {
  BoxDomain domain;
  std::vector<double> values;

  PhysicalField() = default;
  explicit PhysicalField(const BoxDomain& d) : domain(d), values(d.mode_count(), 0.0) {}
};

inline void check_same_domain(const BoxDomain& a, const BoxDomain& b, const char* what) {
  if (!(a == b)) throw ShapeError(std::string(what) + ": operands live on different domains");
}

}  // namespace bcw
