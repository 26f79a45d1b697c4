#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "arcnp_cli/config.hpp"
#include "arcnp_cli/experiment.hpp"

namespace {

struct Globals {
  std::string threads;
  std::string out;
  std::string seed;
};

arcnp::cli::ExperimentConfig load(const std::string& path,
                                  const std::vector<std::string>& extras,
                                  const Globals& g) {
  using namespace arcnp::cli;
  Settings s = load_settings(path);
  for (auto& [k, v] : parse_overrides(extras)) s[k] = v;
  if (!g.threads.empty()) s["threads"] = {g.threads, 0};
  if (!g.out.empty()) s["out"] = {g.out, 0};
  if (!g.seed.empty()) s["seed"] = {g.seed, 0};
  return ExperimentConfig::resolve(s);
}

std::string experiments_line() {
  std::string line = "experiments:";
  for (const auto& n : arcnp::cli::experiment_names()) line += " " + n;
  return line;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Autoregressive conditional neural process experiments"};
  app.require_subcommand(1);
  app.footer(experiments_line() +
             "\nextra settings: run <config> --key value ... (any config key)");

  Globals g;
  app.add_option("--threads", g.threads, "Worker threads (default 1)");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--seed", g.seed, "Run seed");

  std::string run_path;
  auto* run = app.add_subcommand("run", "Run an experiment and write its outputs");
  run->add_option("config", run_path, "key=value config file or a run manifest")
      ->required();
  run->allow_extras();

  std::string describe_path;
  auto* desc = app.add_subcommand("describe", "Print the resolved plan without running");
  desc->add_option("config", describe_path, "key=value config file or a run manifest")
      ->required();
  desc->allow_extras();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*run) {
      const auto cfg = load(run_path, run->remaining(), g);
      return arcnp::cli::run_experiment(cfg, std::cerr);
    }
    const auto cfg = load(describe_path, desc->remaining(), g);
    std::cout << arcnp::cli::describe(cfg);
    return 0;
  } catch (const arcnp::cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n\n" << app.help();
    return 2;
  }
}
