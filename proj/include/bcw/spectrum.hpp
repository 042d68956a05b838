#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include "bcw/domain.hpp"
#include "bcw/medium.hpp"

namespace bcw {

/// The three generator eigenvalues attached to one Dirichlet eigenvalue mu:
/// kappa1 = -a mu from the decoupled heat row, kappa2/kappa3 the roots of
/// the damped-oscillator quadratic kappa^2 + b mu kappa + c^2 mu = 0.
/// kappa2 always carries the larger (least negative) real part.
struct ModeEigenvalues {
  std::complex<double> kappa1{0.0, 0.0};
  std::complex<double> kappa2{0.0, 0.0};
  std::complex<double> kappa3{0.0, 0.0};
  bool defective = false;     // quadratic pair coalesces: b^2 mu == 4 c^2
  bool complex_pair = false;  // underdamped regime b^2 mu < 4 c^2
};

inline ModeEigenvalues mode_eigenvalues(const MediumParams& p, double mu) {
  if (!(mu > 0.0)) throw std::domain_error("mode_eigenvalues: mu must be positive");
  ModeEigenvalues ev;
  ev.kappa1 = {-p.a * mu, 0.0};
  const double bm = p.b * mu;
  const double disc = bm * bm - 4.0 * p.c * p.c * mu;
  // relative tolerance on the discriminant: below this, root separation is
  // numerically meaningless in double precision
  const double disc_scale = std::max(bm * bm, 4.0 * p.c * p.c * mu);
  if (std::abs(disc) <= 1e-12 * disc_scale) {
    ev.kappa2 = ev.kappa3 = {-0.5 * bm, 0.0};
    ev.defective = true;
  } else if (disc > 0.0) {
    // overdamped: take the well-separated root directly, recover the other
    // from the product kappa2*kappa3 = c^2 mu to avoid cancellation
    const double k3 = 0.5 * (-bm - std::sqrt(disc));
    ev.kappa3 = {k3, 0.0};
    ev.kappa2 = {p.c * p.c * mu / k3, 0.0};
  } else {
    const double im = 0.5 * std::sqrt(-disc);
    ev.kappa2 = {-0.5 * bm, im};
    ev.kappa3 = {-0.5 * bm, -im};
    ev.complex_pair = true;
  }
  return ev;
}

/// Spectral abscissa of the generator over modes with eigenvalues >= mu_min:
/// s(A) = -min{ a mu_min, b mu_min / 2, c^2/b }. The last branch is the
/// horizontal asymptote of the slow overdamped root and is approached, never
/// attained, as mu grows.
inline double spectral_bound(const MediumParams& p, double mu_min) {
  if (!(mu_min > 0.0)) throw std::domain_error("spectral_bound: mu_min must be positive");
  const double cand = std::min({p.a * mu_min, 0.5 * p.b * mu_min, p.c * p.c / p.b});
  return -cand;
}

/// Uniform bound on |lambda^2 / v(lambda, mu)| over Re lambda > 0 and
/// mu >= mu_min, with v = lambda^2 + b lambda mu + c^2 mu.
inline double triggiani_constant(const MediumParams& p, double mu_min) {
  if (!(mu_min > 0.0))
    throw std::domain_error("triggiani_constant: mu_min must be positive");
  const double ratio = p.b * p.b * mu_min / (2.0 * p.c * p.c);
  if (ratio >= 1.0) return 1.0;
  const double x = p.b * p.b / (p.c * p.c) * mu_min;
  return 1.0 / std::sqrt(x * (1.0 - 0.25 * x));
}

struct ResolventSampling {
  int n_moduli = 40;
  int n_args = 25;
  double modulus_min = 1e-3;
  double modulus_max = 1e6;
  double arg_margin = 1e-3;  // stay this far inside +-pi/2
};

/// Deterministic lambda grid: log-spaced moduli crossed with arguments
/// covering the open right half-plane up to a small margin off the
/// imaginary axis, where the bounds are tightest.
inline std::vector<std::complex<double>> make_lambda_samples(
    const ResolventSampling& s = {}) {
  std::vector<std::complex<double>> out;
  out.reserve(static_cast<std::size_t>(s.n_moduli) * s.n_args);
  const double lmin = std::log(s.modulus_min), lmax = std::log(s.modulus_max);
  for (int i = 0; i < s.n_moduli; ++i) {
    const double r =
        std::exp(s.n_moduli == 1 ? lmin : lmin + (lmax - lmin) * i / (s.n_moduli - 1.0));
    for (int j = 0; j < s.n_args; ++j) {
      const double span = pi - 2.0 * s.arg_margin;
      const double arg =
          -0.5 * span + (s.n_args == 1 ? 0.5 * span : span * j / (s.n_args - 1.0));
      out.emplace_back(r * std::cos(arg), r * std::sin(arg));
    }
  }
  return out;
}

struct ResolventReport {
  double bound_quadratic = 0.0;        // C: the bound on |lambda^2/v|
  double max_ratio_quadratic = 0.0;    // worst sampled |lambda^2/v|
  double max_ratio_damping = 0.0;      // worst sampled |b lambda mu / v| (bound 1)
  std::complex<double> worst_lambda_quadratic{0.0, 0.0};
  std::complex<double> worst_lambda_damping{0.0, 0.0};
  double worst_mu_quadratic = 0.0;
  double worst_mu_damping = 0.0;
  double tol = 0.0;
  std::size_t n_lambda = 0;
  std::size_t n_modes = 0;
  bool pass = false;
};

namespace detail {

inline int thread_hint() {
  const char* env = std::getenv("BCW_THREADS");
  if (!env) return 1;
  const long v = std::strtol(env, nullptr, 10);
  const long hw = std::max(1u, std::thread::hardware_concurrency());
  return static_cast<int>(std::clamp(v, 1l, hw));
}

}  // namespace detail

/// Evaluates both resolvent ratios of the per-mode symbol for every sampled
/// (lambda, mu) pair. The operator norms collapse to scalar moduli because
/// the Laplacian is diagonal in the sine basis, which is what makes the
/// bounds directly checkable. The sweep is an embarrassingly parallel map;
/// BCW_THREADS > 1 splits the lambda grid, and the max-reduction is exact
/// regardless of the split.
inline ResolventReport verify_resolvent_bounds(
    const MediumParams& p, const std::vector<Mode>& modes,
    const std::vector<std::complex<double>>& lambdas, double tol = 1e-9) {
  if (modes.empty()) throw ShapeError("verify_resolvent_bounds: empty mode set");
  if (!(tol > 0.0)) throw std::domain_error("verify_resolvent_bounds: tol must be positive");
  for (const auto& l : lambdas)
    if (!(l.real() > 0.0))
      throw std::domain_error(
          "verify_resolvent_bounds: lambda samples must have Re > 0");

  double mu_min = modes.front().mu;
  for (const auto& m : modes) mu_min = std::min(mu_min, m.mu);

  struct Worst {
    double rq = 0.0, rd = 0.0, mq = 0.0, md = 0.0;
    std::complex<double> lq{0, 0}, ld{0, 0};
  };
  const std::size_t n = lambdas.size();
  std::vector<Worst> per_lambda(n);
  auto sweep = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const std::complex<double> l = lambdas[i];
      Worst w;
      for (const auto& m : modes) {
        const std::complex<double> v = l * l + p.b * l * m.mu + p.c * p.c * m.mu;
        const double rq = std::abs(l * l / v);
        const double rd = std::abs(p.b * l * m.mu / v);
        if (rq > w.rq) { w.rq = rq; w.mq = m.mu; w.lq = l; }
        if (rd > w.rd) { w.rd = rd; w.md = m.mu; w.ld = l; }
      }
      per_lambda[i] = w;
    }
  };
  const int nt = std::min<int>(detail::thread_hint(), static_cast<int>(std::max<std::size_t>(n, 1)));
  if (nt <= 1) {
    sweep(0, n);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + nt - 1) / nt;
    for (int t = 0; t < nt; ++t) {
      const std::size_t b = std::min(n, t * chunk), e = std::min(n, b + chunk);
      pool.emplace_back(sweep, b, e);
    }
    for (auto& th : pool) th.join();
  }

  ResolventReport rep;
  rep.bound_quadratic = triggiani_constant(p, mu_min);
  rep.tol = tol;
  rep.n_lambda = n;
  rep.n_modes = modes.size();
  for (const Worst& w : per_lambda) {
    if (w.rq > rep.max_ratio_quadratic) {
      rep.max_ratio_quadratic = w.rq;
      rep.worst_lambda_quadratic = w.lq;
      rep.worst_mu_quadratic = w.mq;
    }
    if (w.rd > rep.max_ratio_damping) {
      rep.max_ratio_damping = w.rd;
      rep.worst_lambda_damping = w.ld;
      rep.worst_mu_damping = w.md;
    }
  }
  rep.pass = rep.max_ratio_quadratic <= rep.bound_quadratic * (1.0 + tol) &&
             rep.max_ratio_damping <= 1.0 + tol;
  return rep;
}

}  // namespace bcw
