// ratehalf — Monte Carlo simulator for the Rate-Half cooperative anti-jamming
// strategy: decoding at Bob, detection at Dave, and the near-optimal energy
// division factor between reliability and covertness.

#include <iostream>
#include <set>
#include <string>
#include <array>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "ratehalf/experiment.hpp"

namespace {

struct CommandState {
  CLI::App* app = nullptr;
  std::string config_path;
  std::string grid_text;
};

// Flag spelling -> config-file key, for precedence bookkeeping.
const std::vector<std::pair<const char*, const char*>> kFlagKeys = {
    {"--snr-db", "snr_db"},       {"--alpha", "alpha"},
    {"--delta", "delta"},         {"--m-psk", "m_psk"},
    {"--rho", "rho"},             {"--sigma-ac2", "sigma_ac2"},
    {"--trials", "trials"},       {"--seed", "seed"},
    {"--workers", "workers"},     {"--target-pfa", "target_pfa"},
    {"--alpha-grid", "alpha_grid"}, {"--out", "out"},
};

// `state` must outlive parsing: CLI11 stores references to its members.
void add_common_options(CLI::App* cmd, ratehalf::ExperimentConfig& xc,
                        CommandState& state) {
  state.app = cmd;
  cmd->add_option("--snr-db", xc.snr_db, "SNR in dB; noise power N = 10^(-snr/10)");
  cmd->add_option("--alpha", xc.alpha, "energy division factor, in (0,1)");
  cmd->add_option("--delta", xc.delta, "detector energy deviation, in (0,1)");
  cmd->add_option("--m-psk", xc.m_psk, "PSK order M (>= 2)");
  cmd->add_option("--rho", xc.rho, "loop-interference cancellation, in (0,1)");
  cmd->add_option("--sigma-ac2", xc.sigma_ac2, "Alice-Charlie channel variance (> 0)");
  cmd->add_option("--trials", xc.trials,
                  "Monte Carlo trials (samples per repetition for kld)");
  cmd->add_option("--seed", xc.seed,
                  "master seed (64-bit); RATEHALF_SEED is the fallback");
  cmd->add_option("--workers", xc.workers,
                  "worker threads; 0 = one per hardware thread");
  cmd->add_option("--target-pfa", xc.target_pfa,
                  "false-alarm target for calibrate, in (0,1]");
  cmd->add_option("--alpha-grid", state.grid_text, "sweep grid as start:stop:count");
  cmd->add_option("--out", xc.out, "output file path");
  cmd->add_option("--config", state.config_path,
                  "key=value config file ('#' comments); flags take precedence");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rate-Half cooperative anti-jamming simulator"};
  app.require_subcommand(1);

  ratehalf::ExperimentConfig xc;

  std::array<CommandState, 4> commands;
  add_common_options(
      app.add_subcommand("simulate", "rates and energy audit at one alpha (JSON)"),
      xc, commands[0]);
  add_common_options(
      app.add_subcommand("sweep", "P_UE/P_UD curves over an alpha grid (CSV)"),
      xc, commands[1]);
  add_common_options(
      app.add_subcommand("calibrate", "smallest delta meeting a false-alarm target"),
      xc, commands[2]);
  add_common_options(
      app.add_subcommand("kld", "before/after KLD per band and slot (CSV)"),
      xc, commands[3]);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  CLI::App* chosen_app = app.get_subcommands().front();
  const CommandState* chosen = nullptr;
  for (const CommandState& c : commands)
    if (c.app == chosen_app) chosen = &c;

  std::set<std::string> flag_keys;
  for (const auto& [flag, key] : kFlagKeys)
    if (chosen_app->count(flag) > 0) flag_keys.insert(key);

  try {
    if (chosen_app->count("--alpha-grid") > 0)
      xc.grid = ratehalf::parse_alpha_grid(chosen->grid_text);
    std::set<std::string> file_keys;
    if (chosen_app->count("--config") > 0)
      file_keys = ratehalf::apply_config_file(xc, chosen->config_path, flag_keys);
    ratehalf::apply_env_seed(
        xc, flag_keys.count("seed") > 0 || file_keys.count("seed") > 0);
  } catch (const ratehalf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  return ratehalf::execute_command(chosen_app->get_name(), xc, std::cout,
                                   std::cerr);
}
