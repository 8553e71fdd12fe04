#include <iostream>

#include <CLI11.hpp>

#include "noisebound/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Boundaries of random attractors under bounded noise"};
  app.require_subcommand(1);
  noisebound::CliOptions opts;

  auto common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", opts.config, "INI configuration file")->check(CLI::ExistingFile);
    if (needs_config) c->required();
    sub->add_option("--out", opts.out, "output directory");
    sub->add_option("--seed", opts.seed, "RNG seed for the attractor seeding");
    sub->add_option("--workers", opts.workers, "worker threads")->check(CLI::PositiveNumber);
  };
  auto* attractor = app.add_subcommand("attractor", "minimal attractor, domain of attraction and dual repeller");
  common(attractor, true);
  auto* boundary = app.add_subcommand("boundary", "periodic orbits, manifolds and singularities");
  common(boundary, true);
  auto* sweep = app.add_subcommand("sweep", "bifurcation sweep over one parameter");
  common(sweep, true);
  auto* fit = app.add_subcommand("fit-scaling", "geometric scaling fit of disappearance parameters");
  common(fit, false);
  fit->add_option("--input", opts.input, "CSV with one a_i per row or i,a_i rows");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : noisebound::kExitConfig;
  }
  opts.command = app.get_subcommands().front()->get_name();
  return noisebound::run_command(opts, std::cout, std::cerr);
}
