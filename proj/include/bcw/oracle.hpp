#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "bcw/nonlinear.hpp"

namespace bcw {

/// Brute-force matrix exponential exp(t*M): scaling-and-squaring with a
/// truncated Taylor series, written against a dense library matrix on
/// purpose — it shares no code with the per-mode spectral exponential it is
/// used to check. Accuracy target ~1e-12 relative on well-conditioned
/// inputs; speed is a non-goal.
inline Eigen::MatrixXd dense_expm(const Eigen::MatrixXd& M, double t = 1.0) {
  if (M.rows() != M.cols()) throw ShapeError("dense_expm: matrix must be square");
  if (!(t >= 0.0)) throw std::domain_error("dense_expm: t must be nonnegative");
  const Eigen::Index n = M.rows();
  Eigen::MatrixXd X = t * M;
  int s = 0;
  double eta = X.cwiseAbs().rowwise().sum().maxCoeff();  // infinity norm
  while (eta > 0.5 && s < 64) {
    eta *= 0.5;
    ++s;
  }
  X /= std::ldexp(1.0, s);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
  for (int k = 1; k <= 48; ++k) {
    term = (term * X) / static_cast<double>(k);
    acc += term;
    if (term.cwiseAbs().maxCoeff() <= 1e-18 * acc.cwiseAbs().maxCoeff()) break;
  }
  for (int i = 0; i < s; ++i) acc = acc * acc;
  return acc;
}

/// Classical RK4 on the full semidiscrete system at dt/refinement,
/// recording snapshots on the coarse grid. The z-row source is the same
/// consistent-forcing fixed point the main path uses, evaluated fresh at
/// every stage, so this integrates the identical vector field with a
/// completely different time discretisation.
inline Trajectory rk4_reference_trajectory(const SimConfig& cfg, int refinement) {
  if (refinement < 4)
    throw std::domain_error("rk4_reference_trajectory: refinement must be >= 4");
  if (!(cfg.dt > 0.0) || !(cfg.t_end >= cfg.dt))
    throw ConfigError("rk4_reference_trajectory: bad time grid");
  const SpectralOps ops(cfg.domain, cfg.dealias);
  MediumParams p = cfg.medium;
  if (!cfg.nonlinear_enabled) p.sigma = 0.0;
  const std::vector<Mode>& modes = ops.modes();
  const std::size_t n = modes.size();

  const SpectralField psi0 = field_from_amplitudes(cfg.domain, cfg.psi0_amplitudes, "psi0");
  const SpectralField psi1 = field_from_amplitudes(cfg.domain, cfg.psi1_amplitudes, "psi1");
  const SpectralField psi2 = field_from_amplitudes(cfg.domain, cfg.psi2_amplitudes, "psi2");
  ModalState y = initial_lift(psi0, psi1, psi2, p);

  double guard = 1.0;
  for (std::size_t i = 0; i < n; ++i)
    guard = std::max({guard, std::abs(y.psi[i]), std::abs(y.psit[i]), std::abs(y.z[i])});
  const double growth_limit = 1e10 * guard;

  auto rhs = [&](const ModalState& s, ModalState& ds) {
    const std::vector<double> f = solve_consistent_forcing(ops, p, s);
    for (std::size_t i = 0; i < n; ++i) {
      const double mu = modes[i].mu;
      ds.psi[i] = s.psit[i];
      ds.psit[i] = s.z[i] - p.c * p.c * mu * s.psi[i] - p.b * mu * s.psit[i];
      ds.z[i] = -p.a * mu * s.z[i] + f[i];
    }
  };

  Trajectory traj;
  traj.domain = cfg.domain;
  traj.dt = cfg.dt;
  traj.times.push_back(0.0);
  traj.states.push_back(y);
  traj.forcings.push_back(solve_consistent_forcing(ops, p, y));

  const std::size_t n_steps =
      static_cast<std::size_t>(std::floor(cfg.t_end / cfg.dt + 1e-9));
  const double h = cfg.dt / refinement;
  ModalState k1(cfg.domain), k2(cfg.domain), k3(cfg.domain), k4(cfg.domain),
      tmp(cfg.domain);
  for (std::size_t nstep = 1; nstep <= n_steps; ++nstep) {
    for (int sub = 0; sub < refinement; ++sub) {
      rhs(y, k1);
      for (std::size_t i = 0; i < n; ++i) {
        tmp.psi[i] = y.psi[i] + 0.5 * h * k1.psi[i];
        tmp.psit[i] = y.psit[i] + 0.5 * h * k1.psit[i];
        tmp.z[i] = y.z[i] + 0.5 * h * k1.z[i];
      }
      rhs(tmp, k2);
      for (std::size_t i = 0; i < n; ++i) {
        tmp.psi[i] = y.psi[i] + 0.5 * h * k2.psi[i];
        tmp.psit[i] = y.psit[i] + 0.5 * h * k2.psit[i];
        tmp.z[i] = y.z[i] + 0.5 * h * k2.z[i];
      }
      rhs(tmp, k3);
      for (std::size_t i = 0; i < n; ++i) {
        tmp.psi[i] = y.psi[i] + h * k3.psi[i];
        tmp.psit[i] = y.psit[i] + h * k3.psit[i];
        tmp.z[i] = y.z[i] + h * k3.z[i];
      }
      rhs(tmp, k4);
      const double w = h / 6.0;
      for (std::size_t i = 0; i < n; ++i) {
        y.psi[i] += w * (k1.psi[i] + 2.0 * k2.psi[i] + 2.0 * k3.psi[i] + k4.psi[i]);
        y.psit[i] += w * (k1.psit[i] + 2.0 * k2.psit[i] + 2.0 * k3.psit[i] + k4.psit[i]);
        y.z[i] += w * (k1.z[i] + 2.0 * k2.z[i] + 2.0 * k3.z[i] + k4.z[i]);
      }
      for (std::size_t i = 0; i < n; ++i)
        if (!(std::abs(y.psi[i]) <= growth_limit && std::abs(y.psit[i]) <= growth_limit &&
              std::abs(y.z[i]) <= growth_limit))
          throw StabilityError(
              "rk4_reference_trajectory: norm growth exceeded 1e10; the substep is "
              "unstable for the stiffest retained mode — increase refinement");
    }
    traj.times.push_back(static_cast<double>(nstep) * cfg.dt);
    traj.states.push_back(y);
    traj.forcings.push_back(solve_consistent_forcing(ops, p, y));
  }
  return traj;
}

/// Max over common nodes, modes and state components of the entrywise
/// relative deviation. Entries far below the trajectory scale are measured
/// against a floor of 1e-12 * (global max magnitude) so that fully decayed
/// components do not report roundoff noise as O(1) deviation.
inline double compare_trajectories(const Trajectory& t1, const Trajectory& t2) {
  if (!(t1.domain == t2.domain))
    throw ShapeError("compare_trajectories: domain mismatch");
  if (t1.times.size() != t2.times.size())
    throw ShapeError("compare_trajectories: time grids differ in length");
  for (std::size_t j = 0; j < t1.times.size(); ++j)
    if (std::abs(t1.times[j] - t2.times[j]) >
        1e-12 * std::max(1.0, std::abs(t1.times[j])))
      throw ShapeError("compare_trajectories: time grids do not coincide");

  double global = 0.0;
  for (const auto* tr : {&t1, &t2})
    for (const auto& s : tr->states)
      for (std::size_t i = 0; i < s.size(); ++i)
        global = std::max({global, std::abs(s.psi[i]), std::abs(s.psit[i]),
                           std::abs(s.z[i])});
  const double floor = std::max(1e-12 * global, 1e-300);
  double worst = 0.0;
  for (std::size_t j = 0; j < t1.states.size(); ++j) {
    const ModalState& a = t1.states[j];
    const ModalState& b = t2.states[j];
    if (a.size() != b.size())
      throw ShapeError("compare_trajectories: state sizes differ");
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double pairs[3][2] = {{a.psi[i], b.psi[i]},
                                  {a.psit[i], b.psit[i]},
                                  {a.z[i], b.z[i]}};
      for (const auto& pr : pairs) {
        const double denom = std::max({std::abs(pr[0]), std::abs(pr[1]), floor});
        worst = std::max(worst, std::abs(pr[0] - pr[1]) / denom);
      }
    }
  }
  return worst;
}

}  // namespace bcw
