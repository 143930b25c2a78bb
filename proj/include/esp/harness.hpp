#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "esp/checkpoint.hpp"
#include "esp/config.hpp"
#include "esp/environments.hpp"

namespace esp {

struct EvalResult {
  double mean = 0.0;
  double stderr_of_mean = 0.0;
  double risky_rate = 0.0;
  int episodes = 0;
};

struct TrainResult {
  std::filesystem::path run_dir;
  EvalResult final_eval;
  int64_t steps = 0;
  int64_t real_transitions = 0;
  int64_t stored_transitions = 0;  // includes augmented copies
};

/// Applies the ESP_OUT_ROOT override to relative output paths.
std::filesystem::path resolve_out_dir(const std::string& out_dir);

/// Full training run: collect -> (augment) -> GAE -> update loop with
/// periodic deterministic evaluation, metrics.csv / eval.csv, checkpoints,
/// and a resolved-config snapshot in the run directory.
TrainResult train(const ExperimentConfig& cfg, std::ostream& log);

/// Deterministic evaluation (argmax / mean actions) over fixed-seed
/// episodes. Throws for episodes < 1.
EvalResult evaluate_policy(const Policy& policy, const Environment& env,
                           int episodes, uint64_t seed);
EvalResult evaluate_checkpoint(const std::string& path, int episodes,
                               uint64_t seed);

struct GradCheckSummary {
  std::map<std::string, double> max_rel_err;  // per loss
  double worst() const;
};

/// Finite-difference checks for every loss used by the trainer, on random
/// small instances.
GradCheckSummary run_gradient_checks(int instances_per_loss, uint64_t seed);

/// Consolidated verification suite: group axioms, representation and
/// round-trip properties, environment invariance checkers with negative
/// controls, the tabular oracle (with its broken-game control), and the
/// gradient checks. Prints one line per item; returns the number of
/// unexpected outcomes. Optionally writes a machine-readable JSON report.
int verify(std::ostream& out, const std::string& json_path = "");

/// Ablation families at the config's budget: "count", "type", "coef",
/// "modules". Writes per-run directories plus summary CSVs; returns 0 on
/// success.
int ablate(const ExperimentConfig& base, const std::string& family,
           std::ostream& log);

}  // namespace esp
