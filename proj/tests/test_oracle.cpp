#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <vector>

#include "bcw/evolution.hpp"
#include "bcw/nonlinear.hpp"
#include "bcw/oracle.hpp"

namespace {

bcw::SimConfig linear_config(std::vector<double> lengths, std::vector<int> modes) {
  bcw::SimConfig cfg;
  cfg.domain = bcw::BoxDomain::make(lengths, modes);
  cfg.medium.a = 1.0;
  cfg.medium.b = 2.0;
  cfg.medium.c = 1.0;
  cfg.medium.sigma = 0.0;
  cfg.nonlinear_enabled = false;
  return cfg;
}

std::array<double, 3> apply3(const bcw::Mat3& M, double x0, double x1, double x2) {
  return {M[0] * x0 + M[1] * x1 + M[2] * x2,
          M[3] * x0 + M[4] * x1 + M[5] * x2,
          M[6] * x0 + M[7] * x1 + M[8] * x2};
}

double max_abs_deviation(const bcw::Trajectory& a, const bcw::Trajectory& b) {
  REQUIRE(a.states.size() == b.states.size());
  double dev = 0.0;
  for (std::size_t n = 0; n < a.states.size(); ++n)
    for (std::size_t i = 0; i < a.states[n].size(); ++i) {
      dev = std::max(dev, std::abs(a.states[n].psi[i] - b.states[n].psi[i]));
      dev = std::max(dev, std::abs(a.states[n].psit[i] - b.states[n].psit[i]));
      dev = std::max(dev, std::abs(a.states[n].z[i] - b.states[n].z[i]));
    }
  return dev;
}

}  // namespace

TEST_CASE("dense exponential reproduces closed forms") {
  // exp(0) = I exactly.
  const Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(3, 3);
  REQUIRE((bcw::dense_expm(Z, 1.0) - Eigen::MatrixXd::Identity(3, 3)).norm() == 0.0);

  // Diagonal matrices exponentiate entry by entry.
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(3, 3);
  D(0, 0) = -1.0;
  D(1, 1) = 2.0;
  D(2, 2) = 0.5;
  const Eigen::MatrixXd ED = bcw::dense_expm(D, 0.7);
  for (int i = 0; i < 3; ++i)
    REQUIRE(ED(i, i) == Catch::Approx(std::exp(0.7 * D(i, i))).epsilon(1e-14));
  REQUIRE(std::abs(ED(0, 1)) + std::abs(ED(1, 2)) + std::abs(ED(2, 0)) < 1e-16);

  // Nilpotent block: the series terminates at [[1, t], [0, 1]].
  Eigen::MatrixXd Nl = Eigen::MatrixXd::Zero(2, 2);
  Nl(0, 1) = 1.0;
  const Eigen::MatrixXd EN = bcw::dense_expm(Nl, 3.25);
  REQUIRE(EN(0, 0) == Catch::Approx(1.0).epsilon(1e-15));
  REQUIRE(EN(0, 1) == Catch::Approx(3.25).epsilon(1e-14));
  REQUIRE(EN(1, 0) == 0.0);
  REQUIRE(EN(1, 1) == Catch::Approx(1.0).epsilon(1e-15));

  // Rotation generator: exp(tJ) is the rotation by t.
  Eigen::MatrixXd J(2, 2);
  J << 0.0, -1.0, 1.0, 0.0;
  const double th = 1.1;
  const Eigen::MatrixXd R = bcw::dense_expm(J, th);
  REQUIRE(R(0, 0) == Catch::Approx(std::cos(th)).epsilon(1e-13));
  REQUIRE(R(0, 1) == Catch::Approx(-std::sin(th)).epsilon(1e-13));
  REQUIRE(R(1, 0) == Catch::Approx(std::sin(th)).epsilon(1e-13));
  REQUIRE(R(1, 1) == Catch::Approx(std::cos(th)).epsilon(1e-13));

  // Semigroup property on a fixed dense matrix.
  Eigen::MatrixXd M(4, 4);
  M << -0.5, 1.2, 0.0, -0.3,  //
      0.7, -2.0, 0.4, 0.0,    //
      0.0, 0.3, -1.1, 0.9,    //
      -0.2, 0.0, 0.5, -0.8;
  const Eigen::MatrixXd lhs = bcw::dense_expm(M, 0.9);
  const Eigen::MatrixXd rhs = bcw::dense_expm(M, 0.4) * bcw::dense_expm(M, 0.5);
  REQUIRE((lhs - rhs).norm() / rhs.norm() < 1e-10);

  REQUIRE_THROWS_AS(bcw::dense_expm(Eigen::MatrixXd::Zero(2, 3)), bcw::ShapeError);
  REQUIRE_THROWS_AS(bcw::dense_expm(Z, -1.0), std::domain_error);
}

TEST_CASE("reference integrator matches the per-mode propagator on a linear mode") {
  bcw::SimConfig cfg = linear_config({M_PI}, {1});
  cfg.dt = 0.05;
  cfg.t_end = 1.0;
  cfg.psi0_amplitudes = {0.3};
  cfg.psi1_amplitudes = {-0.2};
  cfg.psi2_amplitudes = {0.1};

  const bcw::Trajectory traj = bcw::rk4_reference_trajectory(cfg, 64);
  REQUIRE(traj.states.size() == 21);
  const bcw::ModalState& y0 = traj.states.front();
  for (std::size_t n = 0; n < traj.states.size(); ++n) {
    const bcw::Mat3 P = bcw::propagator(cfg.medium, 1.0, traj.times[n]);
    const auto exact = apply3(P, y0.psi[0], y0.psit[0], y0.z[0]);
    REQUIRE(traj.states[n].psi[0] == Catch::Approx(exact[0]).margin(1e-8));
    REQUIRE(traj.states[n].psit[0] == Catch::Approx(exact[1]).margin(1e-8));
    REQUIRE(traj.states[n].z[0] == Catch::Approx(exact[2]).margin(1e-8));
  }
}

TEST_CASE("reference integrator self-converges at fourth order") {
  bcw::SimConfig cfg = linear_config({M_PI}, {3});
  cfg.dt = 0.1;
  cfg.t_end = 2.0;
  cfg.psi0_amplitudes = {0.0, 0.0, 0.5};

  const bcw::Trajectory truth = bcw::rk4_reference_trajectory(cfg, 64);
  const double e4 = max_abs_deviation(bcw::rk4_reference_trajectory(cfg, 4), truth);
  const double e8 = max_abs_deviation(bcw::rk4_reference_trajectory(cfg, 8), truth);
  REQUIRE(e4 > 1e-13);
  REQUIRE(e8 > 1e-14);
  const double order = std::log2(e4 / e8);
  REQUIRE(order == Catch::Approx(4.0).margin(0.2));
}

TEST_CASE("linear march agrees with a block-diagonal dense exponential") {
  bcw::SimConfig cfg = linear_config({M_PI}, {3});
  cfg.medium.a = 0.8;
  cfg.medium.c = 1.3;
  cfg.dt = 0.05;
  cfg.t_end = 1.0;
  cfg.psi0_amplitudes = {0.3, -0.2, 0.1};
  cfg.psi1_amplitudes = {0.0, 0.25, -0.15};
  cfg.psi2_amplitudes = {0.05, 0.0, 0.2};
  cfg.stride = 1;

  const bcw::SimulationResult res = bcw::run_simulation(cfg);
  REQUIRE(res.status == bcw::RunStatus::ok);
  const bcw::SpectralOps ops(cfg.domain);
  const std::vector<bcw::Mode>& modes = ops.modes();
  REQUIRE(modes.size() == 3);

  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(9, 9);
  for (std::size_t m = 0; m < 3; ++m) {
    const bcw::Mat3 A = bcw::mode_matrix(cfg.medium, modes[m].mu);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) M(3 * m + r, 3 * m + c) = A[3 * r + c];
  }
  Eigen::VectorXd y0(9);
  const bcw::ModalState& s0 = res.trajectory.states.front();
  for (std::size_t m = 0; m < 3; ++m) {
    y0(3 * m + 0) = s0.psi[m];
    y0(3 * m + 1) = s0.psit[m];
    y0(3 * m + 2) = s0.z[m];
  }

  for (std::size_t n = 0; n < res.trajectory.states.size(); ++n) {
    const Eigen::VectorXd ex = bcw::dense_expm(M, res.trajectory.times[n]) * y0;
    const bcw::ModalState& s = res.trajectory.states[n];
    for (std::size_t m = 0; m < 3; ++m) {
      REQUIRE(s.psi[m] == Catch::Approx(ex(3 * m + 0)).margin(1e-8));
      REQUIRE(s.psit[m] == Catch::Approx(ex(3 * m + 1)).margin(1e-8));
      REQUIRE(s.z[m] == Catch::Approx(ex(3 * m + 2)).margin(1e-8));
    }
  }
}

TEST_CASE("trajectory comparison measures relative deviation") {
  bcw::SimConfig cfg = linear_config({M_PI}, {2});
  cfg.dt = 0.1;
  cfg.t_end = 0.3;
  cfg.psi0_amplitudes = {0.3, 0.1};
  const bcw::Trajectory t1 = bcw::rk4_reference_trajectory(cfg, 4);

  bcw::Trajectory t2 = t1;
  REQUIRE(bcw::compare_trajectories(t1, t2) == 0.0);

  const double v = t2.states[0].psi[0];
  const double pert = v + 1e-6;
  t2.states[0].psi[0] = pert;
  const double expected = (pert - v) / pert;
  REQUIRE(bcw::compare_trajectories(t1, t2) ==
          Catch::Approx(expected).epsilon(1e-12));

  bcw::SimConfig other = linear_config({M_PI}, {3});
  other.dt = 0.1;
  other.t_end = 0.3;
  other.psi0_amplitudes = {0.3, 0.1, 0.0};
  const bcw::Trajectory t3 = bcw::rk4_reference_trajectory(other, 4);
  REQUIRE_THROWS_AS(bcw::compare_trajectories(t1, t3), bcw::ShapeError);

  bcw::Trajectory t4 = t1;
  t4.times.pop_back();
  t4.states.pop_back();
  REQUIRE_THROWS_AS(bcw::compare_trajectories(t1, t4), bcw::ShapeError);

  bcw::Trajectory t5 = t1;
  t5.times[1] += 1e-3;
  REQUIRE_THROWS_AS(bcw::compare_trajectories(t1, t5), bcw::ShapeError);
}

TEST_CASE("stiff mode exposes the stability guard and the refinement cure") {
  // L = pi/100 with one retained mode gives mu = 1e4; the fast root sits
  // near -2e4, so dt = 1e-3 at refinement 4 puts h*kappa near -5, well
  // outside the stability region.
  bcw::SimConfig cfg = linear_config({M_PI / 100.0}, {1});
  cfg.psi1_amplitudes = {1.0};
  cfg.dt = 1e-3;
  cfg.t_end = 1e-2;
  REQUIRE_THROWS_AS(bcw::rk4_reference_trajectory(cfg, 4), bcw::StabilityError);

  // At dt = 1e-4 refinement 4 is stable but inaccurate; refinement 64 is
  // accurate. Measure both against the exact per-mode propagator.
  cfg.dt = 1e-4;
  cfg.t_end = 1e-3;
  const double mu = bcw::enumerate_modes(cfg.domain)[0].mu;
  REQUIRE(mu == Catch::Approx(1e4).epsilon(1e-12));
  auto relative_dev = [&](int refinement) {
    const bcw::Trajectory traj = bcw::rk4_reference_trajectory(cfg, refinement);
    bcw::Trajectory exact = traj;
    const bcw::ModalState& y0 = traj.states.front();
    for (std::size_t n = 0; n < exact.states.size(); ++n) {
      const bcw::Mat3 P = bcw::propagator(cfg.medium, mu, traj.times[n]);
      const auto e = apply3(P, y0.psi[0], y0.psit[0], y0.z[0]);
      exact.states[n].psi[0] = e[0];
      exact.states[n].psit[0] = e[1];
      exact.states[n].z[0] = e[2];
    }
    return bcw::compare_trajectories(traj, exact);
  };
  REQUIRE(relative_dev(4) > 1e-6);
  REQUIRE(relative_dev(64) < 1e-6);

  REQUIRE_THROWS_AS(bcw::rk4_reference_trajectory(cfg, 3), std::domain_error);
  bcw::SimConfig bad = cfg;
  bad.t_end = 0.0;
  REQUIRE_THROWS_AS(bcw::rk4_reference_trajectory(bad, 8), bcw::ConfigError);
}
