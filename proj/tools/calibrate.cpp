// Empirical calibration of the smallness threshold: sweep the initial-data
// amplitude at fixed sigma, classify each run (decays / stalls / fails), and
// report the largest data norm that still produced monotone Lambda decay.
// The shipped default threshold is chosen from this sweep with a safety
// factor, since the underlying theory guarantees existence of a smallness
// level without giving a computable constant.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "bcw/cli.hpp"
#include "bcw/energy.hpp"
#include "bcw/nonlinear.hpp"

namespace {

struct Outcome {
  double amplitude = 0.0;
  double sum = 0.0;       // data norm fed to the smallness check
  double lambda0 = 0.0;
  double lambda_end = 0.0;
  long worst_iter = 0;
  std::string verdict;    // "decays", "stalls", or the failure message
  bool decays = false;
};

Outcome probe(double amp, double sigma, int modes, double dt, double t_end,
              double transient) {
  Outcome out;
  out.amplitude = amp;

  bcw::SimConfig cfg;
  cfg.domain = bcw::BoxDomain::make({M_PI}, {modes});
  cfg.medium = bcw::make_medium(1.0, 2.0, 1.0, sigma);
  cfg.dt = dt;
  cfg.t_end = t_end;
  cfg.stride = 10;
  cfg.psi1_amplitudes = {amp};

  const bcw::SpectralField psi0 =
      bcw::field_from_amplitudes(cfg.domain, cfg.psi0_amplitudes, "psi0");
  const bcw::SpectralField psi1 =
      bcw::field_from_amplitudes(cfg.domain, cfg.psi1_amplitudes, "psi1");
  const bcw::SpectralField psi2 =
      bcw::field_from_amplitudes(cfg.domain, cfg.psi2_amplitudes, "psi2");
  // threshold irrelevant here: we only want the norm
  out.sum = bcw::smallness_check(psi0, psi1, psi2, 1.0, cfg.medium).sum;

  const bcw::SimulationResult res = bcw::run_simulation(cfg);
  for (const bcw::StepDiagnostics& d : res.diagnostics)
    out.worst_iter = std::max(out.worst_iter, static_cast<long>(d.iterations));
  if (res.status != bcw::RunStatus::ok) {
    out.verdict = res.message.empty() ? "failed" : res.message;
    return out;
  }
  out.lambda0 = res.energies.front().Lambda;
  out.lambda_end = res.energies.back().Lambda;
  bool monotone = true;
  for (std::size_t i = 0; i + 1 < res.energies.size(); ++i) {
    if (res.energies[i].t < transient) continue;
    if (res.energies[i + 1].Lambda > res.energies[i].Lambda * (1.0 + 1e-9)) {
      monotone = false;
      break;
    }
  }
  out.decays = monotone && out.lambda_end < out.lambda0;
  out.verdict = out.decays ? "decays" : "stalls";
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Amplitude sweep for calibrating the smallness threshold"};
  double sigma = 1.0;
  double amp_min = 1e-3, amp_max = 10.0;
  int n_amplitudes = 14;
  int modes = 8;
  double dt = 1e-3, t_end = 5.0, transient = 0.5;
  app.add_option("--sigma", sigma, "nonlinearity coefficient (default 1)");
  app.add_option("--amp-min", amp_min, "smallest psi1 amplitude (default 1e-3)");
  app.add_option("--amp-max", amp_max, "largest psi1 amplitude (default 10)");
  app.add_option("--count", n_amplitudes, "sweep points, geometric (default 14)");
  app.add_option("--modes", modes, "retained modes (default 8)");
  app.add_option("--dt", dt, "time step (default 1e-3)");
  app.add_option("--t-end", t_end, "final time (default 5)");
  app.add_option("--transient", transient,
                 "ignore t below this when checking monotone decay (default 0.5)");
  CLI11_PARSE(app, argc, argv);

  std::printf("# amplitude sweep: sigma = %s, %d modes, dt = %s, t_end = %s\n",
              bcw::format_short(sigma).c_str(), modes, bcw::format_short(dt).c_str(),
              bcw::format_short(t_end).c_str());
  std::printf("%12s %12s %12s %12s %6s  %s\n", "amplitude", "data_norm", "Lambda0",
              "Lambda_end", "iters", "verdict");

  const double ratio = std::pow(amp_max / amp_min, 1.0 / (n_amplitudes - 1));
  double largest_good = 0.0, smallest_bad = 0.0;
  for (int i = 0; i < n_amplitudes; ++i) {
    const double amp = amp_min * std::pow(ratio, i);
    const Outcome o = probe(amp, sigma, modes, dt, t_end, transient);
    std::printf("%12s %12s %12s %12s %6ld  %s\n", bcw::format_short(amp).c_str(),
                bcw::format_short(o.sum).c_str(), bcw::format_short(o.lambda0).c_str(),
                bcw::format_short(o.lambda_end).c_str(), o.worst_iter,
                o.verdict.c_str());
    if (o.decays) {
      largest_good = o.sum;
    } else if (smallest_bad == 0.0) {
      smallest_bad = o.sum;
    }
  }

  if (largest_good > 0.0) {
    // halve the last-good norm as a safety factor against the sweep spacing
    std::printf("\nlargest decaying data norm: %s\n",
                bcw::format_short(largest_good).c_str());
    if (smallest_bad > 0.0)
      std::printf("smallest non-decaying data norm: %s\n",
                  bcw::format_short(smallest_bad).c_str());
    std::printf("suggested threshold (with 2x safety factor): %s\n",
                bcw::format_short(0.5 * largest_good).c_str());
  } else {
    std::printf("\nno decaying run found in the sweep; widen the amplitude range\n");
  }
  return 0;
}
