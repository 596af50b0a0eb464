#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "fblin/config.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  fblin::CommandOverrides overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "Scenario config file (JSON)")
      ->required();
  cmd->add_option_function<std::string>(
      "--out", [&args](const std::string& v) { args.overrides.out_dir = v; },
      "Output directory (overrides output_dir in the config)");
  cmd->add_option_function<std::uint64_t>(
      "--seed", [&args](std::uint64_t v) { args.overrides.seed = v; },
      "RNG seed override");
  cmd->add_option_function<double>(
      "--dt", [&args](double v) { args.overrides.dt = v; },
      "Integrator step override [s]");
  cmd->add_option_function<double>(
      "--horizon", [&args](double v) { args.overrides.horizon = v; },
      "Simulation horizon override [s]");
}

int run(int (*command)(const fblin::ScenarioConfig&), const CommonArgs& args) {
  fblin::ScenarioConfig cfg = fblin::load_config(args.config_path);
  fblin::apply_overrides(cfg, args.overrides);
  return command(cfg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Single-track feedback-linearisation simulation and stability toolkit"};
  app.require_subcommand(1);

  CommonArgs sim_args, sweep_args, hopf_args, track_args, val_args;
  CLI::App* sim = app.add_subcommand("simulate",
                                     "Run an open-loop, circle, or custom scenario");
  add_common(sim, sim_args);
  CLI::App* sweep = app.add_subcommand("sweep", "Map stability over (v_bar, dl)");
  add_common(sweep, sweep_args);
  CLI::App* hopf = app.add_subcommand("hopf", "Locate Hopf thresholds in dl");
  add_common(hopf, hopf_args);
  CLI::App* track = app.add_subcommand("track", "Run the circle-tracking test");
  add_common(track, track_args);
  CLI::App* val = app.add_subcommand("validate-config",
                                     "Parse and validate a config, then exit");
  add_common(val, val_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return run(fblin::cmd_simulate, sim_args);
    if (sweep->parsed()) return run(fblin::cmd_sweep, sweep_args);
    if (hopf->parsed()) return run(fblin::cmd_hopf, hopf_args);
    if (track->parsed()) return run(fblin::cmd_track, track_args);
    if (val->parsed()) {
      fblin::ScenarioConfig cfg = fblin::load_config(val_args.config_path);
      fblin::apply_overrides(cfg, val_args.overrides);
      std::printf("ok: %s (hash %s)\n", fblin::experiment_kind_name(cfg.experiment),
                  fblin::config_hash(cfg).c_str());
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
