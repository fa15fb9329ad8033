#include "commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace bvcf::cli;
  CLI::App app{"Boundary-valued coagulation-fragmentation solver"};
  app.set_version_flag("--version", std::string(BVCF_VERSION));
  app.require_subcommand(1);

  CommandOptions opts;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--scenario", opts.scenarios, "Scenario file (repeat with --batch)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opts.out_dir, "Output directory");
    sub->add_option("--seed", opts.seed, "Override the scenario seed");
    sub->add_option("--snapshots", opts.snapshot_stride, "Keep every K-th accepted step as a snapshot")
        ->check(CLI::PositiveNumber);
    sub->add_flag("--batch", opts.batch, "Run several scenarios in parallel (BVCF_WORKERS processes)");
  };

  auto* run = app.add_subcommand("run", "Integrate a scenario and write diagnostics and snapshots");
  auto* eq = app.add_subcommand("equilibrium", "Compute the boundary-induced equilibrium profile");
  auto* oracle = app.add_subcommand("compare-oracle", "Compare lattice moments with the discrete oracle");
  auto* vk = app.add_subcommand("validate-kernel", "Sample the declared kernel bounds");
  auto* fit = app.add_subcommand("decay-fit", "Fit the decay rate of a moment");
  for (auto* sub : {run, eq, oracle, vk, fit}) common(sub);
  vk->add_option("--samples", opts.samples, "Random sample points in addition to the lattice");
  fit->add_option("--lambda", opts.lambda, "Moment order");
  fit->add_option("--window", opts.window, "Fit window t1 t2")->expected(2);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  if (*run) return cmd_run(opts, std::cerr);
  if (*eq) return cmd_equilibrium(opts, std::cerr);
  if (*oracle) return cmd_compare_oracle(opts, std::cerr);
  if (*vk) return cmd_validate_kernel(opts, std::cerr);
  return cmd_decay_fit(opts, std::cerr);
}
