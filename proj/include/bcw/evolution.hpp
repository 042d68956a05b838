#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include "bcw/domain.hpp"
#include "bcw/medium.hpp"
#include "bcw/spectrum.hpp"
#include "bcw/transforms.hpp"

namespace bcw {

using Mat3 = std::array<double, 9>;  // row-major

/// Per-mode generator block acting on (psi_hat, psit_hat, z_hat):
/// rows (0,1,0), (-c^2 mu, -b mu, 1), (0, 0, -a mu).
inline Mat3 mode_matrix(const MediumParams& p, double mu) {
  if (!(mu > 0.0)) throw std::domain_error("mode_matrix: mu must be positive");
  return Mat3{0.0,         1.0,        0.0,  //
              -p.c * p.c * mu, -p.b * mu,  1.0,  //
              0.0,         0.0,        -p.a * mu};
}

namespace detail {

using cd = std::complex<double>;
using CMat3 = std::array<cd, 9>;

inline CMat3 cmul(const CMat3& A, const CMat3& B) {
  CMat3 C{};
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) {
      const cd a = A[i * 3 + k];
      if (a == cd{0.0, 0.0}) continue;
      for (int j = 0; j < 3; ++j) C[i * 3 + j] += a * B[k * 3 + j];
    }
  return C;
}

/// exp(w) - 1 without cancellation for small |Re w|, any Im.
inline cd cexpm1(cd w) {
  const double x = w.real(), y = w.imag();
  const double sy = std::sin(0.5 * y);
  return cd(std::expm1(x) * std::cos(y) - 2.0 * sy * sy,
            std::exp(x) * std::sin(y));
}

inline cd phi1(cd w) {
  if (std::abs(w) < 0.5) {
    // sum_{j>=0} w^j / (j+1)!
    cd term{1.0, 0.0}, acc{1.0, 0.0};
    for (int j = 1; j <= 24; ++j) {
      term *= w / static_cast<double>(j + 1);
      acc += term;
      if (std::abs(term) < 1e-20) break;
    }
    return acc;
  }
  return cexpm1(w) / w;
}

inline cd phi2(cd w) {
  if (std::abs(w) < 0.5) {
    // sum_{j>=0} w^j / (j+2)!
    cd term{0.5, 0.0}, acc{0.5, 0.0};
    for (int j = 1; j <= 24; ++j) {
      term *= w / static_cast<double>(j + 2);
      acc += term;
      if (std::abs(term) < 1e-20) break;
    }
    return acc;
  }
  return (cexpm1(w) - w) / (w * w);
}

using Mat9 = std::array<double, 81>;

inline double norm1_9(const Mat9& M) {
  double best = 0.0;
  for (int j = 0; j < 9; ++j) {
    double s = 0.0;
    for (int i = 0; i < 9; ++i) s += std::abs(M[i * 9 + j]);
    best = std::max(best, s);
  }
  return best;
}

inline Mat9 mul9(const Mat9& A, const Mat9& B) {
  Mat9 C{};
  for (int i = 0; i < 9; ++i)
    for (int k = 0; k < 9; ++k) {
      const double a = A[i * 9 + k];
      if (a == 0.0) continue;
      for (int j = 0; j < 9; ++j) C[i * 9 + j] += a * B[k * 9 + j];
    }
  return C;
}

/// Plain scaling-and-squaring Taylor exponential for the 9x9 block matrix
/// used by the near-defective branch. Uniformly stable; speed irrelevant
/// (built once per mode per run).
inline Mat9 expm9(Mat9 W) {
  int s = 0;
  double eta = norm1_9(W);
  while (eta > 0.25 && s < 60) {
    eta *= 0.5;
    ++s;
  }
  const double scale = std::ldexp(1.0, -s);
  for (double& w : W) w *= scale;
  Mat9 E{}, T{};
  for (int i = 0; i < 9; ++i) E[i * 9 + i] = T[i * 9 + i] = 1.0;
  for (int j = 1; j <= 40; ++j) {
    T = mul9(T, W);
    const double inv = 1.0 / j;
    for (double& t : T) t *= inv;
    for (int i = 0; i < 81; ++i) E[i] += T[i];
    if (norm1_9(T) <= 1e-19 * norm1_9(E)) break;
  }
  for (int i = 0; i < s; ++i) E = mul9(E, E);
  return E;
}

}  // namespace detail

/// The three matrix functions an exponential-trapezoidal step needs for one
/// mode: E = exp(h A_mu), P1 = h*phi1(h A_mu), P2 = h*phi2(h A_mu), with
/// phi1(w) = (e^w - 1)/w and phi2(w) = (e^w - 1 - w)/w^2.
struct ModeExp {
  Mat3 E{};
  Mat3 P1{};
  Mat3 P2{};
};

/// Closed-form spectral (Lagrange) evaluation of the three matrix functions
/// from the eigenvalues {kappa1, kappa2, kappa3}; near eigenvalue
/// coalescence (the Lagrange form loses digits like 1/separation) it falls
/// back to one 9x9 scaling-and-squaring exponential of the block matrix
///   [[hA, I, 0], [0, 0, I], [0, 0, 0]],
/// whose top row of blocks is exactly (exp(hA), phi1(hA), phi2(hA)).
inline ModeExp mode_exponentials(const MediumParams& p, double mu, double h) {
  if (!(h >= 0.0)) throw std::domain_error("mode_exponentials: dt must be nonnegative");
  ModeExp out;
  if (h == 0.0) {
    out.E = Mat3{1, 0, 0, 0, 1, 0, 0, 0, 1};
    return out;  // h*phi1, h*phi2 vanish with h
  }
  const Mat3 A = mode_matrix(p, mu);
  const ModeEigenvalues ev = mode_eigenvalues(p, mu);
  const detail::cd hk[3] = {ev.kappa1 * h, ev.kappa2 * h, ev.kappa3 * h};
  double scale = 0.0;
  for (const auto& k : hk) scale = std::max(scale, std::abs(k));
  double sep = std::abs(hk[0] - hk[1]);
  sep = std::min(sep, std::abs(hk[0] - hk[2]));
  sep = std::min(sep, std::abs(hk[1] - hk[2]));

  if (ev.defective || sep < 1e-4 * std::max(scale, 1.0)) {
    detail::Mat9 W{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) W[i * 9 + j] = h * A[i * 3 + j];
    for (int i = 0; i < 3; ++i) W[i * 9 + (i + 3)] = 1.0;
    for (int i = 3; i < 6; ++i) W[i * 9 + (i + 3)] = 1.0;
    const detail::Mat9 E9 = detail::expm9(W);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        out.E[i * 3 + j] = E9[i * 9 + j];
        out.P1[i * 3 + j] = h * E9[i * 9 + (j + 3)];
        out.P2[i * 3 + j] = h * E9[i * 9 + (j + 6)];
      }
    return out;
  }

  // Lagrange form: f(hA) = sum_n f(hk_n) * prod_{m != n} (hA - hk_m)/(hk_n - hk_m)
  detail::CMat3 hA{};
  for (int i = 0; i < 9; ++i) hA[i] = detail::cd(h * A[i], 0.0);
  detail::CMat3 accE{}, accP1{}, accP2{};
  for (int n = 0; n < 3; ++n) {
    const int m1 = (n + 1) % 3, m2 = (n + 2) % 3;
    detail::CMat3 F1 = hA, F2 = hA;
    for (int i = 0; i < 3; ++i) {
      F1[i * 3 + i] -= hk[m1];
      F2[i * 3 + i] -= hk[m2];
    }
    detail::CMat3 L = detail::cmul(F1, F2);
    const detail::cd denom = (hk[n] - hk[m1]) * (hk[n] - hk[m2]);
    const detail::cd we = std::exp(hk[n]) / denom;
    const detail::cd w1 = detail::phi1(hk[n]) / denom;
    const detail::cd w2 = detail::phi2(hk[n]) / denom;
    for (int i = 0; i < 9; ++i) {
      accE[i] += we * L[i];
      accP1[i] += w1 * L[i];
      accP2[i] += w2 * L[i];
    }
  }
  for (int i = 0; i < 9; ++i) {
    out.E[i] = accE[i].real();
    out.P1[i] = h * accP1[i].real();
    out.P2[i] = h * accP2[i].real();
  }
  return out;
}

/// exp(dt * A_mu): the exact homogeneous per-mode semigroup.
inline Mat3 propagator(const MediumParams& p, double mu, double dt) {
  return mode_exponentials(p, mu, dt).E;
}

/// Lifted modal state. z realizes psi_tt + c^2 mu psi + b mu psi_t per mode,
/// so psi_tt is always recoverable algebraically.
struct ModalState {
  BoxDomain domain;
  std::vector<double> psi, psit, z;  // enumeration order

  ModalState() = default;
  explicit ModalState(const BoxDomain& d)
      : domain(d),
        psi(d.mode_count(), 0.0),
        psit(d.mode_count(), 0.0),
        z(d.mode_count(), 0.0) {}

  std::size_t size() const { return psi.size(); }
};

/// (psi0, psi1, psi2) -> (psi0, psi1, psi2 + c^2 A psi0 + b A psi1).
inline ModalState initial_lift(const SpectralField& psi0, const SpectralField& psi1,
                               const SpectralField& psi2, const MediumParams& p) {
  check_same_domain(psi0.domain, psi1.domain, "initial_lift");
  check_same_domain(psi0.domain, psi2.domain, "initial_lift");
  ModalState s(psi0.domain);
  const std::vector<Mode> modes = enumerate_modes(psi0.domain);
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const double mu = modes[i].mu;
    s.psi[i] = psi0.coeff[i];
    s.psit[i] = psi1.coeff[i];
    s.z[i] = psi2.coeff[i] + p.c * p.c * mu * psi0.coeff[i] + p.b * mu * psi1.coeff[i];
  }
  return s;
}

/// Precomputed per-mode exponentials for one (params, dt); stepping is then
/// three small mat-vecs per mode. Forcing enters only through the z row, so
/// the phi matrices contribute via their third columns.
class ModalStepper {
 public:
  ModalStepper(const SpectralOps& ops, const MediumParams& p, double dt)
      : domain_(ops.domain()), dt_(dt) {
    if (!(dt > 0.0)) throw std::domain_error("ModalStepper: dt must be positive");
    exps_.reserve(ops.modes().size());
    for (const Mode& m : ops.modes()) exps_.push_back(mode_exponentials(p, m.mu, dt));
  }

  double dt() const { return dt_; }
  const BoxDomain& domain() const { return domain_; }
  const ModeExp& exponentials(std::size_t slot) const { return exps_[slot]; }

  /// One exponential-trapezoidal step: the forcing is interpolated linearly
  /// between its step-start and step-end spectral snapshots.
  ModalState step(const ModalState& in, const std::vector<double>& f_begin,
                  const std::vector<double>& f_end) const {
    if (!(in.domain == domain_)) throw ShapeError("step: state domain mismatch");
    if (f_begin.size() != in.size() || f_end.size() != in.size())
      throw ShapeError("step: forcing size mismatch");
    ModalState out(domain_);
    for (std::size_t i = 0; i < in.size(); ++i) {
      const ModeExp& me = exps_[i];
      const double x0 = in.psi[i], x1 = in.psit[i], x2 = in.z[i];
      const double f0 = f_begin[i], df = f_end[i] - f_begin[i];
      out.psi[i] = me.E[0] * x0 + me.E[1] * x1 + me.E[2] * x2 + me.P1[2] * f0 +
                   me.P2[2] * df;
      out.psit[i] = me.E[3] * x0 + me.E[4] * x1 + me.E[5] * x2 + me.P1[5] * f0 +
                    me.P2[5] * df;
      out.z[i] = me.E[6] * x0 + me.E[7] * x1 + me.E[8] * x2 + me.P1[8] * f0 +
                 me.P2[8] * df;
    }
    return out;
  }

 private:
  BoxDomain domain_;
  double dt_;
  std::vector<ModeExp> exps_;
};

/// One Duhamel step from spectral forcing snapshots at the step ends.
inline ModalState step_linear(const ModalState& state, const SpectralField& f_begin,
                              const SpectralField& f_end, double dt,
                              const MediumParams& p) {
  if (!(dt > 0.0)) throw std::domain_error("step_linear: dt must be positive");
  check_same_domain(f_begin.domain, state.domain, "step_linear");
  check_same_domain(f_end.domain, state.domain, "step_linear");
  SpectralOps ops(state.domain);
  ModalStepper stepper(ops, p, dt);
  return stepper.step(state, f_begin.coeff, f_end.coeff);
}

/// Higher time derivatives recovered algebraically from the lifted state and
/// the current forcing snapshot (internal convention z_t = -a mu z + f):
///   psi_tt  = z - c^2 mu psi - b mu psi_t
///   psi_ttt = -a mu z + f - c^2 mu psi_t - b mu psi_tt
/// together with the heat-cascade variable w = psi_t + a mu psi and its
/// first two time derivatives.
struct Derivatives {
  SpectralField psitt, psittt, w, wt, wtt;
};

inline Derivatives reconstruct_derivatives(const ModalState& state,
                                           const std::vector<double>& forcing,
                                           const MediumParams& p,
                                           const std::vector<Mode>& modes) {
  if (forcing.size() != state.size())
    throw ShapeError("reconstruct_derivatives: forcing size mismatch");
  Derivatives d{SpectralField(state.domain), SpectralField(state.domain),
                SpectralField(state.domain), SpectralField(state.domain),
                SpectralField(state.domain)};
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const double mu = modes[i].mu;
    const double c2mu = p.c * p.c * mu, bmu = p.b * mu, amu = p.a * mu;
    const double psitt = state.z[i] - c2mu * state.psi[i] - bmu * state.psit[i];
    const double psittt =
        -amu * state.z[i] + forcing[i] - c2mu * state.psit[i] - bmu * psitt;
    d.psitt.coeff[i] = psitt;
    d.psittt.coeff[i] = psittt;
    d.w.coeff[i] = state.psit[i] + amu * state.psi[i];
    d.wt.coeff[i] = psitt + amu * state.psit[i];
    d.wtt.coeff[i] = psittt + amu * psitt;
  }
  return d;
}

inline Derivatives reconstruct_derivatives(const ModalState& state,
                                           const SpectralField& forcing,
                                           const MediumParams& p) {
  check_same_domain(forcing.domain, state.domain, "reconstruct_derivatives");
  return reconstruct_derivatives(state, forcing.coeff, p,
                                 enumerate_modes(state.domain));
}

/// Uniform-step record of a run: states and the spectral forcing snapshot
/// effective at each node (all zeros on homogeneous runs).
struct Trajectory {
  BoxDomain domain;
  double dt = 0.0;
  std::vector<double> times;
  std::vector<ModalState> states;
  std::vector<std::vector<double>> forcings;
};

}  // namespace bcw
