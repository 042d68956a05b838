#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "bcw/config.hpp"
#include "bcw/energy.hpp"
#include "bcw/nonlinear.hpp"
#include "bcw/spectrum.hpp"

namespace bcw {

/// Shortest round-trippable decimal form of a double (17 significant digits).
inline std::string format_full(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string format_short(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

inline void write_energies_csv(std::ostream& os, const std::vector<EnergySample>& samples) {
  os << "t,E1,E2,calE0,calE,Epsi,Lambda,r,e\n";
  for (const EnergySample& s : samples) {
    os << format_full(s.t) << ',' << format_full(s.E1) << ',' << format_full(s.E2) << ','
       << format_full(s.calE0) << ',' << format_full(s.calE) << ',' << format_full(s.Epsi)
       << ',' << format_full(s.Lambda) << ',' << format_full(s.r) << ','
       << format_full(s.e) << '\n';
  }
}

inline void write_energies_csv(const std::filesystem::path& path,
                               const std::vector<EnergySample>& samples) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ConfigError("cannot open for writing: " + path.string());
  write_energies_csv(f, samples);
}

/// Report accumulated as prose plus a machine-readable key=value block.
/// Every verdict line is paired with the numbers it was decided on, which
/// all land in the machine block too.
struct RunReport {
  std::string title;
  std::vector<std::string> prose;
  std::vector<std::pair<std::string, std::string>> machine;

  void note(std::string line) { prose.push_back(std::move(line)); }
  void kv(const std::string& key, const std::string& value) {
    machine.emplace_back(key, value);
  }
  void kv(const std::string& key, double value) { machine.emplace_back(key, format_full(value)); }
  void kv(const std::string& key, bool value) {
    machine.emplace_back(key, value ? "true" : "false");
  }
  void kv(const std::string& key, long value) { machine.emplace_back(key, std::to_string(value)); }

  void write(std::ostream& os) const {
    os << title << '\n';
    os << std::string(title.size(), '=') << '\n';
    for (const std::string& line : prose) os << line << '\n';
    os << '\n' << "[machine]" << '\n';
    for (const auto& [k, v] : machine) os << k << " = " << v << '\n';
  }
  void write_file(const std::filesystem::path& path) const {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot open for writing: " + path.string());
    write(f);
  }
};

namespace detail {

inline void echo_config(RunReport& rep, const SimConfig& cfg) {
  std::string lengths = "[", modes = "[";
  for (int i = 0; i < cfg.domain.dims; ++i) {
    if (i) {
      lengths += ", ";
      modes += ", ";
    }
    lengths += format_full(cfg.domain.lengths[i]);
    modes += std::to_string(cfg.domain.modes_per_dim[i]);
  }
  lengths += "]";
  modes += "]";
  rep.kv("config.domain.dims", static_cast<long>(cfg.domain.dims));
  rep.kv("config.domain.lengths", lengths);
  rep.kv("config.domain.modes_per_dim", modes);
  rep.kv("config.medium.a", cfg.medium.a);
  rep.kv("config.medium.b", cfg.medium.b);
  rep.kv("config.medium.c", cfg.medium.c);
  rep.kv("config.medium.sigma", cfg.medium.sigma);
  rep.kv("config.time.dt", cfg.dt);
  rep.kv("config.time.t_end", cfg.t_end);
  rep.kv("config.nonlinear.enabled", cfg.nonlinear_enabled);
  rep.kv("config.dealias", cfg.dealias);
  rep.kv("config.picard.tol", cfg.picard_tol);
  rep.kv("config.picard.max_iter", static_cast<long>(cfg.picard_max_iter));
  rep.kv("config.output.stride", static_cast<long>(cfg.stride));
}

inline std::filesystem::path resolve_out_dir(const SimConfig& cfg, const std::string& out_override) {
  std::filesystem::path dir = out_override.empty() ? cfg.output_dir : out_override;
  std::filesystem::create_directories(dir);
  return dir;
}

inline void add_fit(RunReport& rep, const char* name, const std::vector<double>& t,
                    const std::vector<double>& v) {
  try {
    const DecayFit fit = fit_decay_rate(t, v);
    rep.kv(std::string("fit.") + name + ".rate", fit.omega);
    rep.kv(std::string("fit.") + name + ".rms_residual", fit.rms_residual);
    rep.kv(std::string("fit.") + name + ".n_used", static_cast<long>(fit.n_used));
  } catch (const InsufficientDataError&) {
    rep.kv(std::string("fit.") + name + ".rate", std::string("nan"));
  }
}

}  // namespace detail

/// Per-mode eigenvalue table with the growth-bound footer.
inline int cmd_spectrum(const SimConfig& cfg, const std::string& out_override = "",
                        std::ostream& os = std::cout) {
  const std::vector<Mode> modes = enumerate_modes(cfg.domain);
  const MediumParams& p = cfg.medium;

  std::ostringstream table;
  table << "# mode eigenvalues (a=" << format_short(p.a) << ", b=" << format_short(p.b)
        << ", c=" << format_short(p.c) << ")\n";
  table << "k1 k2 k3          mu        kappa1    Re(kappa2)    Im(kappa2)    Re(kappa3)    "
           "Im(kappa3)  defective\n";
  for (const Mode& m : modes) {
    const ModeEigenvalues ev = mode_eigenvalues(p, m.mu);
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "%2d %2d %2d %13.6g %13.6g %13.6g %13.6g %13.6g %13.6g  %s\n", m.k[0],
                  m.k[1], m.k[2], m.mu, ev.kappa1.real(), ev.kappa2.real(),
                  ev.kappa2.imag(), ev.kappa3.real(), ev.kappa3.imag(),
                  ev.defective ? "yes" : "no");
    table << buf;
  }
  const double mu_min = modes.front().mu;
  const double sA = spectral_bound(p, mu_min);
  const double C = triggiani_constant(p, mu_min);
  table << "s(A) = " << format_full(sA) << '\n';
  table << "triggiani_constant = " << format_full(C) << '\n';

  os << table.str();
  if (!out_override.empty() || !cfg.output_dir.empty()) {
    const auto dir = detail::resolve_out_dir(cfg, out_override);
    std::ofstream f(dir / "spectrum.txt", std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot open for writing: " + (dir / "spectrum.txt").string());
    f << table.str();
  }
  return 0;
}

/// Full simulation run: energies.csv plus report.txt into the output
/// directory. Exit 1 when the run ends early (divergence / degeneracy);
/// partial outputs are still written.
inline int cmd_simulate(const SimConfig& cfg, const std::string& out_override = "",
                        std::ostream& os = std::cout) {
  const auto dir = detail::resolve_out_dir(cfg, out_override);
  const SimulationResult result = run_simulation(cfg);
  write_energies_csv(dir / "energies.csv", result.energies);

  RunReport rep;
  rep.title = "bcw simulate report";
  detail::echo_config(rep, cfg);

  const SpectralOps ops(cfg.domain, cfg.dealias);
  const double mu_min = ops.mu_min();
  const double sA = spectral_bound(cfg.medium, mu_min);
  rep.kv("spectral_bound", sA);
  rep.kv("triggiani_constant", triggiani_constant(cfg.medium, mu_min));
  rep.note("Spectral bound s(A) = " + format_short(sA) +
           "; linear energies decay like exp(2 s(A) t).");

  const bool nonlinear = cfg.nonlinear_enabled && cfg.medium.sigma > 0.0;
  if (nonlinear) {
    const SpectralField psi0 = field_from_amplitudes(cfg.domain, cfg.psi0_amplitudes, "psi0");
    const SpectralField psi1 = field_from_amplitudes(cfg.domain, cfg.psi1_amplitudes, "psi1");
    const SpectralField psi2 = field_from_amplitudes(cfg.domain, cfg.psi2_amplitudes, "psi2");
    const SmallnessReport sm =
        smallness_check(psi0, psi1, psi2, default_smallness_threshold, cfg.medium);
    rep.kv("smallness.sum", sm.sum);
    rep.kv("smallness.threshold", sm.threshold);
    rep.kv("smallness.lambda0", sm.lambda0);
    rep.kv("smallness.pass", sm.pass);
    rep.note(std::string("Smallness check: data size ") + format_short(sm.sum) +
             (sm.pass ? " <= " : " > ") + format_short(sm.threshold) +
             (sm.pass ? " (within the global-existence regime)."
                      : " (outside the guaranteed regime; the run may still succeed)."));
  }

  long max_iter = 0;
  double max_res = 0.0, min_margin = 1.0;
  bool all_conv = true;
  for (const StepDiagnostics& d : result.diagnostics) {
    max_iter = std::max(max_iter, static_cast<long>(d.iterations));
    max_res = std::max(max_res, d.residual);
    min_margin = std::min(min_margin, d.margin);
    all_conv = all_conv && d.converged;
  }
  rep.kv("steps.count", static_cast<long>(result.diagnostics.size()));
  rep.kv("steps.max_picard_iterations", max_iter);
  rep.kv("steps.max_residual", max_res);
  rep.kv("steps.min_margin", min_margin);
  rep.kv("steps.all_converged", all_conv);
  rep.note("Steps: " + std::to_string(result.diagnostics.size()) + ", worst Picard iteration count " +
           std::to_string(max_iter) + ", minimum degeneracy margin " + format_short(min_margin) + ".");

  if (result.energies.size() >= 6) {
    std::vector<double> t, e1, e2, lam;
    for (const EnergySample& s : result.energies) {
      t.push_back(s.t);
      e1.push_back(s.E1);
      e2.push_back(s.E2);
      lam.push_back(s.Lambda);
    }
    detail::add_fit(rep, "E1", t, e1);
    detail::add_fit(rep, "E2", t, e2);
    detail::add_fit(rep, "Lambda", t, lam);
    rep.kv("expected_linear_rate", 2.0 * std::abs(sA));
  }

  const char* status = result.status == RunStatus::ok         ? "ok"
                       : result.status == RunStatus::diverged ? "diverged"
                                                              : "degenerate";
  rep.kv("status", std::string(status));
  if (!result.message.empty()) rep.kv("status.message", result.message);
  rep.note(std::string("Run status: ") + status +
           (result.status == RunStatus::ok ? "." : " — trajectory truncated at the last good step."));

  rep.write_file(dir / "report.txt");
  rep.write(os);
  return result.status == RunStatus::ok ? 0 : 1;
}

/// Samples the resolvent bounds over the deterministic lambda grid and the
/// configured mode set. Exit 0 iff both bounds hold at every sample.
inline int cmd_verify_bounds(const SimConfig& cfg, const std::string& out_override = "",
                             std::ostream& os = std::cout) {
  const std::vector<Mode> modes = enumerate_modes(cfg.domain);
  const std::vector<std::complex<double>> lambdas = make_lambda_samples(ResolventSampling{});
  const ResolventReport rr = verify_resolvent_bounds(cfg.medium, modes, lambdas);

  RunReport rep;
  rep.title = "bcw verify-bounds report";
  detail::echo_config(rep, cfg);
  rep.kv("resolvent.bound_quadratic", rr.bound_quadratic);
  rep.kv("resolvent.max_ratio_quadratic", rr.max_ratio_quadratic);
  rep.kv("resolvent.max_ratio_damping", rr.max_ratio_damping);
  rep.kv("resolvent.worst_lambda_quadratic.re", rr.worst_lambda_quadratic.real());
  rep.kv("resolvent.worst_lambda_quadratic.im", rr.worst_lambda_quadratic.imag());
  rep.kv("resolvent.worst_mu_quadratic", rr.worst_mu_quadratic);
  rep.kv("resolvent.worst_lambda_damping.re", rr.worst_lambda_damping.real());
  rep.kv("resolvent.worst_lambda_damping.im", rr.worst_lambda_damping.imag());
  rep.kv("resolvent.worst_mu_damping", rr.worst_mu_damping);
  rep.kv("resolvent.n_lambda", static_cast<long>(rr.n_lambda));
  rep.kv("resolvent.n_modes", static_cast<long>(rr.n_modes));
  rep.kv("resolvent.tol", rr.tol);
  rep.kv("resolvent.pass", rr.pass);
  rep.note("Quadratic-term bound: worst |lambda^2 / v| = " + format_short(rr.max_ratio_quadratic) +
           " vs C = " + format_short(rr.bound_quadratic) + ".");
  rep.note("Damping-term bound: worst |b lambda mu / v| = " + format_short(rr.max_ratio_damping) +
           " vs 1.");
  rep.note(rr.pass ? "All sampled resolvent ratios are within their bounds."
                   : "A sampled resolvent ratio exceeded its bound.");

  const auto dir = detail::resolve_out_dir(cfg, out_override);
  rep.write_file(dir / "resolvent.txt");
  rep.write(os);
  return rr.pass ? 0 : 1;
}

/// Homogeneous run plus a fit of the observed decay rates against the
/// predicted 2|s(A)|. Exit 0 iff the fitted rates match within tolerance
/// and the Lyapunov functional is non-increasing past the transient.
inline int cmd_decay_report(const SimConfig& cfg, const std::string& out_override = "",
                            std::ostream& os = std::cout) {
  SimConfig linear_cfg = cfg;
  linear_cfg.nonlinear_enabled = false;
  const auto dir = detail::resolve_out_dir(cfg, out_override);
  const SimulationResult result = run_simulation(linear_cfg);
  write_energies_csv(dir / "energies.csv", result.energies);

  RunReport rep;
  rep.title = "bcw decay report";
  detail::echo_config(rep, linear_cfg);

  const SpectralOps ops(cfg.domain, cfg.dealias);
  const double mu_min = ops.mu_min();
  const double sA = spectral_bound(cfg.medium, mu_min);
  rep.kv("spectral_bound", sA);
  rep.kv("expected_rate", 2.0 * std::abs(sA));

  bool pass = result.status == RunStatus::ok;
  if (pass) {
    const DecayReport dr = verify_decay(result.energies, cfg.medium, mu_min, false);
    rep.kv("fit.E1.rate", dr.fit_e1.omega);
    rep.kv("fit.E1.rel_err", dr.rel_err_e1);
    rep.kv("fit.E2.rate", dr.fit_e2.omega);
    rep.kv("fit.E2.rel_err", dr.rel_err_e2);
    rep.kv("fit.Lambda.rate", dr.fit_lambda.omega);
    rep.kv("lambda.start", dr.lambda_start);
    rep.kv("lambda.end", dr.lambda_end);
    rep.kv("lambda.monotone", dr.lambda_monotone);
    rep.kv("rate_tol", dr.rate_tol);
    rep.kv("window_ok", dr.window_ok);
    rep.note("Fitted E1 rate " + format_short(dr.fit_e1.omega) + " vs expected " +
             format_short(dr.expected_rate) + " (rel err " + format_short(dr.rel_err_e1) + ").");
    rep.note("Fitted E2 rate " + format_short(dr.fit_e2.omega) + " (rel err " +
             format_short(dr.rel_err_e2) + ").");
    rep.note(dr.lambda_monotone ? "Lambda is non-increasing past the transient."
                                : "Lambda increased past the transient window.");
    pass = dr.pass;
  } else {
    rep.note("Linear run did not complete; no decay fit available.");
  }
  rep.kv("pass", pass);

  rep.write_file(dir / "report.txt");
  rep.write(os);
  return pass ? 0 : 1;
}

}  // namespace bcw
