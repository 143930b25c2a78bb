#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "esp/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"esp: multi-agent RL with symmetry augmentation and "
               "consistency losses, plus exact symmetry verifiers"};
  app.require_subcommand(1);

  // train
  auto* train_cmd = app.add_subcommand("train", "run one training experiment");
  std::string train_config;
  int64_t seed_override = -1;
  std::string out_override;
  train_cmd->add_option("--config", train_config, "config file")->required();
  train_cmd->add_option("--seed", seed_override, "override config seed");
  train_cmd->add_option("--out", out_override, "override output directory");

  // evaluate
  auto* eval_cmd =
      app.add_subcommand("evaluate", "evaluate a saved checkpoint");
  std::string ckpt_path;
  int episodes = 50;
  uint64_t eval_seed = 12345;
  eval_cmd->add_option("--checkpoint", ckpt_path, "checkpoint file")
      ->required();
  eval_cmd->add_option("--episodes", episodes, "number of episodes");
  eval_cmd->add_option("--seed", eval_seed, "evaluation seed");

  // verify
  auto* verify_cmd = app.add_subcommand(
      "verify", "run the full verification suite (group axioms, environment "
                "invariance, tabular oracle, gradient checks)");
  std::string verify_config, verify_json;
  verify_cmd->add_option("--config", verify_config,
                         "optional config (unused keys are still validated)");
  verify_cmd->add_option("--json", verify_json, "write JSON report here");

  // ablate
  auto* ablate_cmd = app.add_subcommand("ablate", "run an ablation family");
  std::string ablate_config, family;
  ablate_cmd->add_option("--config", ablate_config, "base config file")
      ->required();
  ablate_cmd
      ->add_option("--family", family, "count | type | coef | modules")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) {
      esp::ExperimentConfig cfg = esp::ExperimentConfig::from_file(train_config);
      if (seed_override >= 0) cfg.seed = static_cast<uint64_t>(seed_override);
      if (!out_override.empty()) cfg.out_dir = out_override;
      esp::train(cfg, std::cout);
      return 0;
    }
    if (*eval_cmd) {
      esp::EvalResult r =
          esp::evaluate_checkpoint(ckpt_path, episodes, eval_seed);
      std::printf("episodes=%d mean_return=%.6f stderr=%.6f risky_rate=%.4f\n",
                  r.episodes, r.mean, r.stderr_of_mean, r.risky_rate);
      return 0;
    }
    if (*verify_cmd) {
      if (!verify_config.empty())
        esp::ExperimentConfig::from_file(verify_config);  // key validation
      int failures = esp::verify(std::cout, verify_json);
      return failures == 0 ? 0 : 1;
    }
    if (*ablate_cmd) {
      esp::ExperimentConfig cfg =
          esp::ExperimentConfig::from_file(ablate_config);
      return esp::ablate(cfg, family, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
