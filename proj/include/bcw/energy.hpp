#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "bcw/evolution.hpp"
#include "bcw/medium.hpp"
#include "bcw/transforms.hpp"

namespace bcw {

/// All energy functionals tracked by the run, evaluated at one time.
/// E1/E2 are the first-order-system energies, calE0/calE the wave-part
/// energies of w, Epsi the higher-order psi energy, Lambda = Epsi + calE the
/// functional whose boundedness and decay the small-data theory asserts, and
/// r/e the auxiliary dissipation sums appearing in the final estimate.
struct EnergySample {
  double t = 0.0;
  double E1 = 0.0;
  double E2 = 0.0;
  double calE0 = 0.0;
  double calE = 0.0;
  double Epsi = 0.0;
  double Lambda = 0.0;
  double r = 0.0;
  double e = 0.0;
};

/// Evaluate every functional from the lifted state, the forcing snapshot and
/// the forcing time-derivative snapshot. The fourth time derivative needs
/// f_t:  psi_tttt = a^2 mu^2 z - a mu f + f_t - c^2 mu psi_tt - b mu psi_ttt
/// (differentiate the z row once more); homogeneous runs pass zero rates.
inline EnergySample compute_energies(const SpectralOps& ops, const MediumParams& p,
                                     const ModalState& state,
                                     const std::vector<double>& forcing,
                                     const std::vector<double>& forcing_rate,
                                     double t) {
  if (!(state.domain == ops.domain()))
    throw ShapeError("compute_energies: state domain mismatch");
  if (forcing.size() != state.size() || forcing_rate.size() != state.size())
    throw ShapeError("compute_energies: forcing size mismatch");
  const std::vector<Mode>& modes = ops.modes();
  const std::size_t n = state.size();
  std::vector<double> psitt(n), psittt(n), psitttt(n), w(n), wt(n), wtt(n), wttt(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double mu = modes[i].mu;
    const double c2mu = p.c * p.c * mu, bmu = p.b * mu, amu = p.a * mu;
    psitt[i] = state.z[i] - c2mu * state.psi[i] - bmu * state.psit[i];
    psittt[i] = -amu * state.z[i] + forcing[i] - c2mu * state.psit[i] - bmu * psitt[i];
    psitttt[i] = amu * amu * state.z[i] - amu * forcing[i] + forcing_rate[i] -
                 c2mu * psitt[i] - bmu * psittt[i];
    w[i] = state.psit[i] + amu * state.psi[i];
    wt[i] = psitt[i] + amu * state.psit[i];
    wtt[i] = psittt[i] + amu * psitt[i];
    wttt[i] = psitttt[i] + amu * psittt[i];
  }
  auto n2 = [&](const std::vector<double>& v, double s) { return ops.norm_sq(v, s); };
  EnergySample out;
  out.t = t;
  out.E1 = n2(state.psi, 1.0) + n2(state.psit, 0.0) + n2(state.z, 0.0);
  out.E2 = n2(state.psi, 2.0) + n2(state.psit, 0.0) + n2(state.z, 0.0);
  out.calE0 = 0.5 * (n2(wtt, 0.0) + n2(wt, 1.0) + n2(w, 2.0));
  out.calE = 0.5 * (n2(wtt, 1.0) + n2(wt, 1.0) + n2(w, 2.0));
  out.Epsi = 0.5 * (n2(psittt, 1.0) + n2(psitt, 2.0) + n2(state.psit, 2.0));
  out.Lambda = out.Epsi + out.calE;
  out.r = n2(wttt, 0.0) + n2(wtt, 1.0) + n2(wt, 2.0) + n2(w, 2.0) +
          n2(psitttt, 0.0) + n2(psittt, 2.0) + n2(psitt, 3.0) + n2(state.psit, 3.0);
  out.e = n2(psitttt, 0.0) + n2(psittt, 1.0) + n2(psitt, 3.0);
  return out;
}

/// Convenience form matching the state+forcing call shape (zero forcing
/// rate, i.e. exact for homogeneous runs).
inline EnergySample compute_energies(const ModalState& state,
                                     const SpectralField& forcing,
                                     const MediumParams& p, double t = 0.0) {
  check_same_domain(forcing.domain, state.domain, "compute_energies");
  SpectralOps ops(state.domain);
  return compute_energies(ops, p, state, forcing.coeff,
                          std::vector<double>(state.size(), 0.0), t);
}

/// Forcing time-derivative snapshots by finite differences on the stored
/// per-step forcings: centered in the interior, one-sided at the ends.
inline std::vector<std::vector<double>> forcing_rates(const Trajectory& traj) {
  const std::size_t m = traj.states.size();
  std::vector<std::vector<double>> rates(m);
  if (m == 0) return rates;
  const std::size_t n = traj.forcings.front().size();
  const double dt = traj.dt;
  for (std::size_t j = 0; j < m; ++j) {
    rates[j].assign(n, 0.0);
    if (m == 1) continue;
    const std::size_t lo = (j == 0) ? 0 : j - 1;
    const std::size_t hi = (j + 1 == m) ? j : j + 1;
    const double span = (hi - lo) * dt;
    for (std::size_t i = 0; i < n; ++i)
      rates[j][i] = (traj.forcings[hi][i] - traj.forcings[lo][i]) / span;
  }
  return rates;
}

/// Energy samples along a trajectory at the given node stride (node 0
/// always included).
inline std::vector<EnergySample> sample_energies(const Trajectory& traj,
                                                 const MediumParams& p,
                                                 const SpectralOps& ops, int stride) {
  if (stride < 1) throw std::domain_error("sample_energies: stride must be >= 1");
  const std::vector<std::vector<double>> rates = forcing_rates(traj);
  std::vector<EnergySample> out;
  for (std::size_t j = 0; j < traj.states.size(); j += static_cast<std::size_t>(stride))
    out.push_back(compute_energies(ops, p, traj.states[j], traj.forcings[j], rates[j],
                                   traj.times[j]));
  return out;
}

/// Least-squares exponential fit over the trailing window of a positive
/// series: omega is minus the slope of the line through (t, log v).
struct DecayFit {
  double omega = 0.0;
  double amplitude = 0.0;
  double rms_residual = 0.0;
  std::size_t n_used = 0;
  double t_begin = 0.0;
};

inline DecayFit fit_decay_rate(const std::vector<double>& times,
                               const std::vector<double>& values,
                               double tail_fraction = 0.5) {
  if (times.size() != values.size())
    throw ShapeError("fit_decay_rate: times/values length mismatch");
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0))
    throw std::domain_error("fit_decay_rate: tail_fraction must lie in (0,1]");
  const std::size_t n = times.size();
  const std::size_t count =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::ceil(tail_fraction * n)));
  const std::size_t begin = n - count;
  std::vector<double> t, y;
  for (std::size_t i = begin; i < n; ++i) {
    if (values[i] > 0.0) {
      t.push_back(times[i]);
      y.push_back(std::log(values[i]));
    }
  }
  if (t.size() < 3)
    throw InsufficientDataError(
        "fit_decay_rate: need at least 3 strictly positive samples in the tail "
        "window, got " + std::to_string(t.size()));
  double tm = 0.0, ym = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    tm += t[i];
    ym += y[i];
  }
  tm /= t.size();
  ym /= t.size();
  double stt = 0.0, sty = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    stt += (t[i] - tm) * (t[i] - tm);
    sty += (t[i] - tm) * (y[i] - ym);
  }
  if (!(stt > 0.0)) throw InsufficientDataError("fit_decay_rate: degenerate time window");
  const double slope = sty / stt;
  const double intercept = ym - slope * tm;
  double ss = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double r = y[i] - (intercept + slope * t[i]);
    ss += r * r;
  }
  DecayFit fit;
  fit.omega = -slope;
  fit.amplitude = std::exp(intercept);
  fit.rms_residual = std::sqrt(ss / t.size());
  fit.n_used = t.size();
  fit.t_begin = t.front();
  return fit;
}

/// Decay verdicts. Linear runs check the fitted E1/E2 rates against twice
/// the spectral abscissa (energies are squared norms, so the asymptotic rate
/// doubles); nonlinear small-data runs check that Lambda is non-increasing
/// beyond the transient window and decays at some positive fitted rate.
struct DecayReport {
  bool nonlinear = false;
  double expected_rate = 0.0;  // 2|s(A)|
  DecayFit fit_e1, fit_e2, fit_lambda;
  double rel_err_e1 = 0.0, rel_err_e2 = 0.0;
  double lambda_start = 0.0, lambda_end = 0.0;
  bool lambda_monotone = false;
  bool window_ok = true;  // t_end >= 5/|s(A)| heuristic
  double rate_tol = 0.0, transient = 0.0;
  bool pass = false;
};

inline DecayReport verify_decay(const std::vector<EnergySample>& samples,
                                const MediumParams& p, double mu_min, bool nonlinear,
                                double rate_tol = 0.05, double transient = 0.5,
                                double tail_fraction = 0.5) {
  if (samples.size() < 3) throw InsufficientDataError("verify_decay: too few samples");
  DecayReport rep;
  rep.nonlinear = nonlinear;
  rep.rate_tol = rate_tol;
  rep.transient = transient;
  const double s_bound = spectral_bound(p, mu_min);
  rep.expected_rate = 2.0 * std::abs(s_bound);
  const double t_end = samples.back().t;
  rep.window_ok = t_end * std::abs(s_bound) >= 5.0;
  std::vector<double> times;
  times.reserve(samples.size());
  for (const auto& s : samples) times.push_back(s.t);
  if (!nonlinear) {
    std::vector<double> e1, e2;
    for (const auto& s : samples) {
      e1.push_back(s.E1);
      e2.push_back(s.E2);
    }
    rep.fit_e1 = fit_decay_rate(times, e1, tail_fraction);
    rep.fit_e2 = fit_decay_rate(times, e2, tail_fraction);
    rep.rel_err_e1 = std::abs(rep.fit_e1.omega - rep.expected_rate) / rep.expected_rate;
    rep.rel_err_e2 = std::abs(rep.fit_e2.omega - rep.expected_rate) / rep.expected_rate;
    rep.pass = rep.rel_err_e1 <= rate_tol && rep.rel_err_e2 <= rate_tol;
  } else {
    std::vector<double> lam;
    for (const auto& s : samples) lam.push_back(s.Lambda);
    rep.lambda_start = lam.front();
    rep.lambda_end = lam.back();
    rep.lambda_monotone = true;
    for (std::size_t i = 1; i < samples.size(); ++i) {
      if (samples[i - 1].t < transient) continue;
      // tiny relative slack: the samples are sums of rounded squared norms
      if (samples[i].Lambda > samples[i - 1].Lambda * (1.0 + 1e-9)) {
        rep.lambda_monotone = false;
        break;
      }
    }
    rep.fit_lambda = fit_decay_rate(times, lam, tail_fraction);
    rep.pass = rep.lambda_monotone && rep.fit_lambda.omega > 0.0 &&
               rep.lambda_end < rep.lambda_start;
  }
  return rep;
}

/// Trajectory-level convenience: samples every node, infers the run kind
/// from the stored forcings (all-zero -> linear branch).
inline DecayReport verify_decay(const Trajectory& traj, const MediumParams& p,
                                double mu_min) {
  SpectralOps ops(traj.domain);
  bool forced = false;
  for (const auto& f : traj.forcings) {
    for (double v : f)
      if (v != 0.0) {
        forced = true;
        break;
      }
    if (forced) break;
  }
  return verify_decay(sample_energies(traj, p, ops, 1), p, mu_min, forced);
}

namespace detail {

inline double trapezoid(const std::vector<double>& v, double dt) {
  if (v.size() < 2) return 0.0;
  double acc = 0.5 * (v.front() + v.back());
  for (std::size_t i = 1; i + 1 < v.size(); ++i) acc += v[i];
  return acc * dt;
}

}  // namespace detail

/// Discrete heat energy identity along a trajectory, with v = psi_ttt (the
/// heat-cascade unknown whose source is w_ttt):
///   int ||v_t + a A v||^2  =  a||A^{1/2}v(T)||^2 - a||A^{1/2}v(0)||^2
///                             + int (||v_t||^2 + a^2||A v||^2).
/// Both sides are O(dt^2) quadrature discretizations; the residual measures
/// exactly that quadrature error.
struct IdentityCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
  double scale = 1.0;
};

inline IdentityCheck heat_identity_check(const Trajectory& traj, const MediumParams& p,
                                         const SpectralOps& ops) {
  const std::size_t m = traj.states.size();
  if (m < 2) throw InsufficientDataError("heat_identity_check: need >= 2 nodes");
  const std::vector<std::vector<double>> rates = forcing_rates(traj);
  const std::size_t n = traj.states.front().size();
  const std::vector<Mode>& modes = ops.modes();
  std::vector<double> lhs_sq(m), vt_sq(m), av_sq(m);
  double v_half_begin = 0.0, v_half_end = 0.0;
  std::vector<double> v(n), vt(n);
  for (std::size_t j = 0; j < m; ++j) {
    const ModalState& s = traj.states[j];
    const std::vector<double>& f = traj.forcings[j];
    const std::vector<double>& ft = rates[j];
    std::vector<double> wttt(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double mu = modes[i].mu;
      const double c2mu = p.c * p.c * mu, bmu = p.b * mu, amu = p.a * mu;
      const double psitt = s.z[i] - c2mu * s.psi[i] - bmu * s.psit[i];
      const double psittt = -amu * s.z[i] + f[i] - c2mu * s.psit[i] - bmu * psitt;
      const double psitttt =
          amu * amu * s.z[i] - amu * f[i] + ft[i] - c2mu * psitt - bmu * psittt;
      v[i] = psittt;
      vt[i] = psitttt;
      wttt[i] = psitttt + amu * psittt;
    }
    lhs_sq[j] = ops.norm_sq(wttt, 0.0);
    vt_sq[j] = ops.norm_sq(vt, 0.0);
    av_sq[j] = ops.norm_sq(v, 2.0);
    if (j == 0) v_half_begin = ops.norm_sq(v, 1.0);
    if (j + 1 == m) v_half_end = ops.norm_sq(v, 1.0);
  }
  IdentityCheck chk;
  chk.lhs = detail::trapezoid(lhs_sq, traj.dt);
  double diss = 0.0;
  {
    std::vector<double> sum(m);
    for (std::size_t j = 0; j < m; ++j) sum[j] = vt_sq[j] + p.a * p.a * av_sq[j];
    diss = detail::trapezoid(sum, traj.dt);
  }
  chk.rhs = p.a * (v_half_end - v_half_begin) + diss;
  chk.residual = std::abs(chk.lhs - chk.rhs);
  chk.scale = std::max({std::abs(chk.lhs), std::abs(chk.rhs), 1e-300});
  return chk;
}

/// Discrete analogue of the third-derivative estimate for solutions of
/// D_w w = f:
///   1/2 int ||w_ttt||^2 + (b/2) ||A^{1/2}w_tt||^2 |_0^T
///     <=  c^4 int ||A w_t||^2 + int ||f_t||^2  (+ quadrature tolerance).
struct Prop51Check {
  double lhs = 0.0;
  double rhs = 0.0;
  double violation = 0.0;  // max(0, lhs - rhs)
  double slack = 0.0;      // max(0, rhs - lhs)
  double quad_tol = 0.0;
  bool pass = false;
};

inline Prop51Check prop51_check(const Trajectory& traj, const MediumParams& p,
                                const SpectralOps& ops) {
  const std::size_t m = traj.states.size();
  if (m < 2) throw InsufficientDataError("prop51_check: need >= 2 nodes");
  const std::vector<std::vector<double>> rates = forcing_rates(traj);
  const std::size_t n = traj.states.front().size();
  const std::vector<Mode>& modes = ops.modes();
  std::vector<double> wttt_sq(m), awt_sq(m), ft_sq(m);
  double wtt_half_begin = 0.0, wtt_half_end = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const ModalState& s = traj.states[j];
    const std::vector<double>& f = traj.forcings[j];
    const std::vector<double>& ft = rates[j];
    std::vector<double> wt(n), wtt(n), wttt(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double mu = modes[i].mu;
      const double c2mu = p.c * p.c * mu, bmu = p.b * mu, amu = p.a * mu;
      const double psitt = s.z[i] - c2mu * s.psi[i] - bmu * s.psit[i];
      const double psittt = -amu * s.z[i] + f[i] - c2mu * s.psit[i] - bmu * psitt;
      const double psitttt =
          amu * amu * s.z[i] - amu * f[i] + ft[i] - c2mu * psitt - bmu * psittt;
      wt[i] = psitt + amu * s.psit[i];
      wtt[i] = psittt + amu * psitt;
      wttt[i] = psitttt + amu * psittt;
    }
    wttt_sq[j] = ops.norm_sq(wttt, 0.0);
    awt_sq[j] = ops.norm_sq(wt, 2.0);
    ft_sq[j] = ops.norm_sq(ft, 0.0);
    if (j == 0) wtt_half_begin = ops.norm_sq(wtt, 1.0);
    if (j + 1 == m) wtt_half_end = ops.norm_sq(wtt, 1.0);
  }
  Prop51Check chk;
  chk.lhs = 0.5 * detail::trapezoid(wttt_sq, traj.dt) +
            0.5 * p.b * (wtt_half_end - wtt_half_begin);
  chk.rhs = std::pow(p.c, 4) * detail::trapezoid(awt_sq, traj.dt) +
            detail::trapezoid(ft_sq, traj.dt);
  chk.violation = std::max(0.0, chk.lhs - chk.rhs);
  chk.slack = std::max(0.0, chk.rhs - chk.lhs);
  // quadrature tolerance: both sides are trapezoid sums with O(dt^2) error
  double scale = std::max(std::abs(chk.lhs), std::abs(chk.rhs));
  for (std::size_t j = 0; j < m; ++j)
    scale = std::max({scale, wttt_sq[j], awt_sq[j], ft_sq[j]});
  chk.quad_tol = 10.0 * traj.dt * traj.dt * std::max(scale, 1e-300);
  chk.pass = chk.violation <= chk.quad_tol;
  return chk;
}

}  // namespace bcw
