#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bace/commands.hpp"
#include "bace/config.hpp"

namespace {

struct FlagOverrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> dataset, rul_file, checkpoint, out, ablation;
  std::optional<int> rul_cap, samples;
};

// Flag > file > default.
bace::RunConfig resolve_config(const FlagOverrides& flags) {
  bace::RunConfig cfg;
  if (!flags.config_path.empty()) cfg = bace::parse_config_file(flags.config_path);
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.dataset) cfg.dataset = *flags.dataset;
  if (flags.rul_file) cfg.rul_file = *flags.rul_file;
  if (flags.checkpoint) cfg.checkpoint = *flags.checkpoint;
  if (flags.out) cfg.out = *flags.out;
  if (flags.rul_cap) cfg.rul_cap = *flags.rul_cap;
  if (flags.ablation) cfg.ablation = *flags.ablation;
  if (flags.samples) cfg.n_samples = *flags.samples;
  cfg.ablation_mode();  // reject bad values before any work happens
  return cfg;
}

void add_common_flags(CLI::App* cmd, FlagOverrides& flags) {
  cmd->add_option("--config", flags.config_path, "Configuration file (key = value lines)");
  cmd->add_option("--seed", flags.seed, "Random seed");
  cmd->add_option("--dataset", flags.dataset, "Input dataset path");
  cmd->add_option("--rul-file", flags.rul_file, "Per-unit true-RUL file for truncated test sets");
  cmd->add_option("--checkpoint", flags.checkpoint, "Model checkpoint path");
  cmd->add_option("--out", flags.out, "Output directory");
  cmd->add_option("--rul-cap", flags.rul_cap, "RUL early constant value (cycles)");
  cmd->add_option("--ablation", flags.ablation, "Ablation: none | no-cond | no-e2");
  cmd->add_option("--samples", flags.samples, "Latent draws per prediction");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bace-rul: adversarially trained remaining-useful-life predictor"};
  app.require_subcommand(1);

  FlagOverrides flags;
  CLI::App* cmd_train = app.add_subcommand("train", "Train a model and write a checkpoint");
  CLI::App* cmd_evaluate = app.add_subcommand("evaluate", "Evaluate a checkpoint on a dataset");
  CLI::App* cmd_predict = app.add_subcommand("predict", "Predict RUL for single-cycle feature rows");
  CLI::App* cmd_synth = app.add_subcommand("synth", "Generate a synthetic degradation fixture");
  for (CLI::App* cmd : {cmd_train, cmd_evaluate, cmd_predict, cmd_synth})
    add_common_flags(cmd, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : bace::kExitUsage;
  }

  try {
    const bace::RunConfig cfg = resolve_config(flags);
    if (cmd_train->parsed()) return bace::run_train(cfg, std::cout, std::cerr);
    if (cmd_evaluate->parsed()) return bace::run_evaluate(cfg, std::cout, std::cerr);
    if (cmd_predict->parsed()) return bace::run_predict(cfg, std::cout, std::cerr);
    if (cmd_synth->parsed()) return bace::run_synth(cfg, std::cout, std::cerr);
  } catch (...) {
    return bace::exit_code_for_current_exception(std::cerr);
  }
  return bace::kExitUsage;
}
