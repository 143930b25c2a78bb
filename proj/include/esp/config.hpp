#pragma once

#include <cstdint>
#include <string>

#include "esp/esp_layer.hpp"

namespace esp {

/// Experiment description parsed from a flat key-value file with [trainer]
/// and [esp] sections. Every field has a default; unknown keys are an error
/// (reported with their section-qualified path).
struct ExperimentConfig {
  std::string env_name = "coop_nav";
  int n_agents = 0;  // 0 = environment default
  std::string algorithm = "mappo";  // mappo | mappo_esp
  int64_t total_steps = 100000;
  int64_t eval_every = 25000;
  int eval_episodes = 50;
  int n_seeds = 5;
  uint64_t seed = 1;
  std::string out_dir = "runs/exp";
  TrainerConfig trainer;
  EspConfig esp;

  static ExperimentConfig from_file(const std::string& path);
  static ExperimentConfig from_text(const std::string& text,
                                    const std::string& origin = "<inline>");

  /// Full key set with resolved values, parseable by from_text.
  std::string resolved_text() const;

  void validate() const;
  bool esp_enabled() const { return algorithm == "mappo_esp"; }
};

}  // namespace esp
