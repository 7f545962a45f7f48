// Command-line front end: coin-profile validation, walk simulation, and the
// scattering / dispersive-estimate pipelines, with cached intermediate data.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "qws/orchestrate.hpp"

int main(int argc, char** argv) {
  CLI::App app{"qws - scattering and dispersive analysis of 1D quantum walks"};
  app.require_subcommand(1);
  app.fallthrough();  // accept the global flags after the subcommand too

  qws::RunConfig cfg;
  app.add_option("--threads", cfg.threads, "worker threads for grid sweeps");
  app.add_option("--seed", cfg.seed, "seed for randomized probes (recorded in outputs)");
  app.add_option("--cache-dir", cfg.cache_dir, "Jost-table cache directory ('' disables)");
  app.add_option("--log-level", cfg.log_level, "quiet|info");

  auto* validate = app.add_subcommand("validate", "check a coin profile against the standing assumptions");
  validate->add_option("--profile", cfg.profile_path, "coin profile JSON")->required();
  validate->add_option("--out", cfg.out_path, "optional JSON report path");

  auto* simulate = app.add_subcommand("simulate", "evolve a state and write the final wavefunction");
  simulate->add_option("--profile", cfg.profile_path)->required();
  simulate->add_option("--t", cfg.t, "number of steps");
  simulate->add_option("--initial", cfg.initial, "delta | path to a state JSON");
  simulate->add_option("--out", cfg.out_path, "output CSV")->required();

  auto* dispersion = app.add_subcommand("dispersion", "band data of the constant-coin walk");
  dispersion->add_option("--rho0", cfg.rho0)->required();
  dispersion->add_option("--grid", cfg.grid);
  dispersion->add_option("--out", cfg.out_path)->required();

  auto* jost = app.add_subcommand("jost", "Jost solutions on a quasi-momentum grid");
  jost->add_option("--profile", cfg.profile_path)->required();
  jost->add_option("--branch", cfg.branch, "minus|plus");
  jost->add_option("--grid", cfg.grid);
  jost->add_option("--delta", cfg.delta, "imaginary shift of the grid");
  jost->add_option("--out", cfg.out_path)->required();

  auto* scattering = app.add_subcommand("scattering", "transmission/reflection, resonances, bound states");
  scattering->add_option("--profile", cfg.profile_path)->required();
  scattering->add_option("--branch", cfg.branch, "minus|plus|both");
  scattering->add_option("--grid", cfg.grid);
  scattering->add_option("--out", cfg.out_path, "basename; writes .csv and .json")->required();

  auto* dispersive = app.add_subcommand("dispersive", "sup-norm decay experiment");
  dispersive->add_option("--profile", cfg.profile_path)->required();
  dispersive->add_option("--tmax", cfg.tmax);
  dispersive->add_option("--route", cfg.route, "direct|kernel|both");
  dispersive->add_option("--grid", cfg.grid, "kernel-route quadrature grid");
  dispersive->add_option("--initial", cfg.initial);
  dispersive->add_option("--out", cfg.out_path)->required();

  auto* fit = app.add_subcommand("fit", "decay-exponent fit of a dispersive CSV");
  fit->add_option("--in", cfg.in_path)->required();
  fit->add_option("--out", cfg.out_path, "optional JSON output");

  CLI11_PARSE(app, argc, argv);
  cfg.command = app.get_subcommands().front()->get_name();

  try {
    std::string text;
    const int code = qws::orchestrate(cfg, &text);
    if (!text.empty()) std::cout << text;
    if (cfg.log_level == "info" && !cfg.out_path.empty())
      std::cerr << cfg.command << ": wrote " << cfg.out_path << (cfg.command == "scattering" ? ".{csv,json}" : "")
                << "\n";
    return code;
  } catch (const qws::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const qws::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const qws::NumericalConsistencyError& e) {
    std::cerr << "numerical consistency error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
