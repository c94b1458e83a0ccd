#include <nmagg/nmagg.hpp>

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Planar nonlocal micropolar two-phase flow simulator"};
  app.require_subcommand(1);

  std::string config;
  nmagg::RunnerOverrides ov;
  std::string out;
  std::uint64_t seed = 0;
  int threads = 0;

  const std::vector<std::pair<nmagg::Command, std::string>> commands = {
      {nmagg::Command::run, "Integrate one trajectory"},
      {nmagg::Command::validate, "Parse the config and run every gate"},
      {nmagg::Command::sweep_eta_r, "Micro-rotation viscosity consistency sweep"},
      {nmagg::Command::sweep_kappa, "Kernel-width sweep against the local model"},
      {nmagg::Command::kernel_table, "Static nonlocal-to-local functional table"},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [cmd, help] : commands) {
    CLI::App* sub = app.add_subcommand(nmagg::to_string(cmd), help);
    sub->add_option("config", config, "INI configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "Output directory (default: $NMAGG_OUT, then [output] dir)");
    sub->add_option("--seed", seed, "Seed for randomized initial data");
    sub->add_option("--threads", threads, "Worker threads for sweeps")->check(CLI::PositiveNumber);
    subs.push_back(sub);
  }

  CLI11_PARSE(app, argc, argv);

  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    if (subs[i]->count("--out")) ov.out = out;
    if (subs[i]->count("--seed")) ov.seed = seed;
    if (subs[i]->count("--threads")) ov.threads = threads;
    return nmagg::run_command(commands[i].first, config, ov, std::cout);
  }
  return nmagg::exit_internal_error;
}
