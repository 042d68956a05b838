#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "bcw/cli.hpp"

namespace {

bcw::SimConfig load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw bcw::ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return bcw::parse_config(buf.str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral simulator and bound checker for strongly damped nonlinear acoustics"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "path to key=value config file")->required();
    sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
  };

  CLI::App* spectrum = app.add_subcommand("spectrum", "per-mode eigenvalue table and growth bound");
  CLI::App* simulate = app.add_subcommand("simulate", "run the simulation; write energies.csv and report");
  CLI::App* verify = app.add_subcommand("verify-bounds", "sample the resolvent bounds");
  CLI::App* decay = app.add_subcommand("decay-report", "homogeneous run with fitted decay rates");
  for (CLI::App* sub : {spectrum, simulate, verify, decay}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    const bcw::SimConfig cfg = load_config(config_path);
    if (spectrum->parsed()) return bcw::cmd_spectrum(cfg, out_dir);
    if (simulate->parsed()) return bcw::cmd_simulate(cfg, out_dir);
    if (verify->parsed()) return bcw::cmd_verify_bounds(cfg, out_dir);
    if (decay->parsed()) return bcw::cmd_decay_report(cfg, out_dir);
  } catch (const bcw::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
