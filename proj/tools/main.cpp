// spinbath: simulate N spins coupled to a thermal reservoir across four
// layers (exact full space, Dicke ladder, mean field, pair-correlation
// closure) and emit trajectory tables for comparison and sweeps.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "spinbath/cli.hpp"
#include "spinbath/version.hpp"

namespace {

using spinbath::cli::RunConfig;

void add_common_options(CLI::App* cmd, RunConfig& cfg, bool with_init = true) {
  cmd->add_option("--N", cfg.params.n_particles, "number of particles");
  cmd->add_option("--omega0", cfg.params.omega0, "transition frequency (default 1)");
  cmd->add_option("--gamma", cfg.params.gamma, "decay rate (default 1; times are in 1/gamma)");
  cmd->add_option("--nbar", cfg.params.nbar, "thermal occupation of the bath (default 0)");
  cmd->add_option("--t-final", cfg.t_final, "end time of the run");
  cmd->add_option("--samples", cfg.samples, "number of uniformly spaced samples");
  cmd->add_option("--sample-times", cfg.sample_times, "explicit ascending sample times");
  if (with_init)
    cmd->add_option("--init", cfg.init,
                    "initial state: all_excited | near_excited:<eps> | custom:<file>");
  cmd->add_option("--output,-o", cfg.output, "output file (default: CSV on stdout)");
  cmd->add_option("--format", cfg.format, "output format: csv | json");
  cmd->add_option("--seed", cfg.seed, "seed echoed into run metadata");
  std::map<std::string, spinbath::ode::Method> methods{
      {"rk4", spinbath::ode::Method::rk4_fixed},
      {"rk45", spinbath::ode::Method::rk45_adaptive}};
  cmd->add_option("--method", cfg.integrator.method, "integrator: rk4 | rk45")
      ->transform(CLI::CheckedTransformer(methods, CLI::ignore_case));
  cmd->add_option("--step", cfg.integrator.step, "fixed step size (rk4)");
  cmd->add_option("--rtol", cfg.integrator.rtol, "relative tolerance (rk45)");
  cmd->add_option("--atol", cfg.integrator.atol, "absolute tolerance (rk45)");
  cmd->add_option("--max-steps", cfg.integrator.max_steps, "integrator step budget");
  cmd->add_option("--n-max", cfg.n_max, "full-space particle cap (default 12)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spin-bath dynamics: exact, reduced and mean-field layers"};
  app.set_version_flag("--version", spinbath::kVersion);
  app.require_subcommand(0, 1);

  std::string config_path;
  app.add_option("--config", config_path, "load the full run configuration from a JSON file");

  RunConfig cfg;

  auto* exact = app.add_subcommand("exact", "full 2^N master-equation evolution");
  add_common_options(exact, cfg);

  auto* dicke = app.add_subcommand("dicke", "master equation on the symmetric Dicke ladder");
  add_common_options(dicke, cfg);

  auto* meanfield = app.add_subcommand("meanfield", "nonlinear single-particle Bloch dynamics");
  add_common_options(meanfield, cfg);
  meanfield->add_flag("--no-dissipation{false}", cfg.dissipation,
                      "drop the relaxation terms (Hamiltonian flow only)");

  auto* closedform =
      app.add_subcommand("closedform", "tanh/sech closed form of the dissipation-free flow");
  add_common_options(closedform, cfg);

  auto* stationary = app.add_subcommand("stationary", "thermal stationary state");
  add_common_options(stationary, cfg);

  auto* compare =
      app.add_subcommand("compare", "side-by-side rho_ee columns across the layers");
  add_common_options(compare, cfg);
  compare->add_flag("--no-dissipation{false}", cfg.dissipation,
                    "compare the dissipation-free flows");

  auto* correlations =
      app.add_subcommand("correlations", "pair-correlation closure of the hierarchy");
  add_common_options(correlations, cfg);
  correlations->add_option("--mode", cfg.mode, "closure mode: full | linear_response");

  auto* sweep = app.add_subcommand("sweep", "cartesian parameter grid, one file per cell");
  add_common_options(sweep, cfg, /*with_init=*/true);
  sweep->add_option("--over", cfg.sweep_over, "command run per cell: meanfield | exact | dicke");
  sweep->add_option("--N-list", cfg.sweep_n, "grid values of N");
  sweep->add_option("--nbar-list", cfg.sweep_nbar, "grid values of nbar");
  sweep->add_option("--gamma-list", cfg.sweep_gamma, "grid values of gamma");
  sweep->add_option("--output-dir", cfg.output_dir, "directory for cell files and index.json");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) {
        std::cerr << "config error: cannot open " << config_path << "\n";
        return 2;
      }
      nlohmann::json doc;
      in >> doc;
      cfg = spinbath::cli::from_json(doc);
    } else {
      if (app.get_subcommands().empty()) {
        std::cerr << app.help();
        return 2;
      }
      cfg.command = app.get_subcommands().front()->get_name();
    }
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  return spinbath::cli::run_with_exit_code(cfg);
}
