#include <iostream>

#include "CLI11.hpp"
#include "swingup/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Double-pendulum swing-up: SAC training, SNES fine-tuning and evaluation"};
  app.require_subcommand(1);

  swingup::CliOptions opts;
  std::uint64_t seed = 0;

  const auto common = [&](CLI::App* cmd) {
    cmd->add_option("--config", opts.config, "Experiment config (JSON)")->required();
    cmd->add_option("--seed", seed, "Override run.seed");
    cmd->add_option("--output", opts.output, "Run directory (overrides run.output)");
    cmd->add_flag("--force", opts.force, "Overwrite existing artifacts");
  };

  auto* train = app.add_subcommand("train", "Train a SAC policy on the surrogate reward");
  common(train);
  auto* finetune = app.add_subcommand("finetune", "Fine-tune a policy with SNES on the episode score");
  common(finetune);
  finetune->add_option("--checkpoint", opts.checkpoint, "Parent checkpoint")->required();
  auto* eval = app.add_subcommand("eval", "Score a checkpoint; writes report, CSV and plots");
  common(eval);
  eval->add_option("--checkpoint", opts.checkpoint, "Checkpoint to evaluate")->required();
  eval->add_flag("--robustness", opts.robustness, "Run the perturbation sweep");
  auto* plot = app.add_subcommand("plot", "Render a trajectory CSV");
  plot->add_option("csv", opts.csv, "Trajectory CSV")->required();
  plot->add_option("--output", opts.output, "Run directory; image goes to <output>/plots/");
  plot->add_flag("--force", opts.force, "Overwrite an existing image");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : swingup::kExitConfigError;
  }
  for (auto* cmd : {train, finetune, eval})
    if (cmd->parsed() && cmd->count("--seed")) opts.seed = seed;

  if (train->parsed()) return swingup::cmd_train(opts, std::cout, std::cerr);
  if (finetune->parsed()) return swingup::cmd_finetune(opts, std::cout, std::cerr);
  if (eval->parsed()) return swingup::cmd_eval(opts, std::cout, std::cerr);
  return swingup::cmd_plot(opts, std::cout, std::cerr);
}
