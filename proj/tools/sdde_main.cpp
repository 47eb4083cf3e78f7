#include <CLI11.hpp>

#include <iostream>

#include "sdde/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Markovian reduction of stochastic delay equations: projection, simulation, "
               "error scans, moving-average option pricing and policy cost evaluation"};
  app.require_subcommand(1);

  std::string config_path;
  sdde::cli::CliOverrides overrides;
  std::string out_dir;
  uint64_t seed = 0;
  bool seed_set = false;
  int verbosity = 0;

  const std::vector<std::pair<std::string, std::string>> tasks = {
      {"project", "Fourier coefficients and truncation tails of a kernel"},
      {"simulate", "simulate oracle and chain paths, export CSV"},
      {"error-scan", "coupled truncation-error scan over a list of orders"},
      {"price", "least-squares Monte Carlo value of a stopping problem"},
      {"control-eval", "policy cost on the chain and the oracle"},
      {"basis", "dump weighted basis functions as CSV"}};

  for (const auto& [name, desc] : tasks) {
    auto* sub = app.add_subcommand(name, desc);
    sub->add_option("config", config_path, "experiment config file")->required();
    sub->add_option("--out", out_dir, "output directory (overrides config and SDDE_OUT_DIR)");
    auto* seed_opt = sub->add_option("--seed", seed, "override sim.seed");
    sub->add_flag("-v,--verbose", verbosity, "verbose progress output");
    sub->callback([&, seed_opt]() { seed_set = seed_opt->count() > 0; });
  }

  CLI11_PARSE(app, argc, argv);

  if (!out_dir.empty()) overrides.out_dir = out_dir;
  if (seed_set) overrides.seed = seed;
  overrides.verbosity = verbosity;

  const std::string task = app.get_subcommands().front()->get_name();
  return sdde::cli::run_cli(task, config_path, overrides, std::cout, std::cerr);
}
