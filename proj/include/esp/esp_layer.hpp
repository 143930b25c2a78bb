#pragma once

#include <string>
#include <vector>

#include "esp/mappo.hpp"

namespace esp {

/// Configuration of the symmetry layer: which group, which elements feed the
/// data-augmentation module, which elements feed the consistency losses, the
/// loss coefficient c, and the two ablation switches.
struct EspConfig {
  std::string group = "c4";
  std::vector<std::string> augmentation_elements = {"r90"};
  /// Empty means "all non-identity elements of the group".
  std::vector<std::string> consistency_elements = {};
  double c = 0.5;
  enum class KlDirection { kAsWritten, kReversed };
  KlDirection kl_direction = KlDirection::kAsWritten;
  bool augment_enabled = true;
  bool loss_enabled = true;

  static EspConfig disabled() {
    EspConfig e;
    e.augment_enabled = false;
    e.loss_enabled = false;
    e.c = 0.0;
    return e;
  }

  bool loss_active() const { return loss_enabled && c > 0.0; }
  bool active() const { return augment_enabled || loss_active(); }
  void validate() const;
};

/// Resolves element-name lists against a spec's group, enforcing that the
/// identity is never listed.
std::vector<int> resolve_elements(const SymmetrySpec& spec,
                                  const std::vector<std::string>& names,
                                  bool default_all_non_identity);

/// For each element g, returns a transformed copy of the trajectory:
/// states and observations through L_g, actions through K_g, rewards and
/// flags unchanged, and behavior log-probs recomputed by evaluating the
/// behavior policy on the transformed (obs, action) pairs. Identity elements
/// are allowed (test path); they yield is_augmented = false.
std::vector<Trajectory> augment_trajectory(const Trajectory& traj,
                                           const SymmetrySpec& spec,
                                           const std::vector<int>& element_ids,
                                           const Policy& behavior_policy);

/// Re-simulates an augmented trajectory's transformed actions from its
/// transformed states and reports the worst deviation from the stored next
/// states (plus any reward mismatch). Used by tests and the verify suite.
double validate_augmentation(const Environment& env, const Trajectory& original,
                             const Trajectory& augmented,
                             const SymmetrySpec& spec);

// ---- loss builders (shared between the update and the gradient checks) ----

struct PpoPolicyLossGraph {
  int loss = -1;        // scalar node: -(surrogate) - entropy_coef * entropy
  int surrogate = -1;   // mean clipped objective
  int entropy = -1;     // mean policy entropy
  std::vector<double> ratios;  // per (row, agent), for clip-fraction metrics
};

PpoPolicyLossGraph build_ppo_policy_loss(
    Graph& g, const Policy& policy, const std::vector<double>& obs, int rows,
    const std::vector<Action>& actions,
    const std::vector<double>& behavior_logp,
    const std::vector<double>& advantages, double clip, double entropy_coef);

int build_value_loss(Graph& g, const Critic& critic,
                     const std::vector<double>& globals, int rows,
                     const std::vector<double>& targets);

int build_policy_entropy(Graph& g, const Policy& policy,
                         const std::vector<double>& obs, int rows);

/// KL between the policy at the transformed observation (pulled back through
/// K_g) and the policy at the original observation, averaged over rows.
/// Differentiable through both branches.
int build_sym_policy_loss(Graph& g, const Policy& policy,
                          const std::vector<double>& obs, int rows,
                          const SymmetrySpec& spec, const GroupElement& elem,
                          EspConfig::KlDirection dir);

/// Mean squared critic discrepancy between original and transformed global
/// states; differentiable through both branches.
int build_sym_value_loss(Graph& g, const Critic& critic,
                         const std::vector<double>& globals, int rows,
                         const SymmetrySpec& spec, const GroupElement& elem);

// ---- standalone evaluations (no gradients; tests and diagnostics) ----

double symmetry_policy_loss(const Policy& policy, const RolloutBatch& batch,
                            const SymmetrySpec& spec, const GroupElement& elem,
                            EspConfig::KlDirection dir);

double symmetry_value_loss(const Critic& critic, const RolloutBatch& batch,
                           const SymmetrySpec& spec, const GroupElement& elem);

struct RatioSummary {
  double min = 1.0;
  double max = 1.0;
  double mean = 1.0;
  double p99 = 1.0;
  int n = 0;
};

/// Distribution of pi(K_g[a] | L_g[s]) / pi(a | s) over the real (non-
/// augmented) transitions of the batch, evaluated with the behavior policy.
RatioSummary ratio_diagnostic(const Policy& behavior_policy,
                              const RolloutBatch& batch,
                              const SymmetrySpec& spec,
                              const GroupElement& elem);

/// The combined update: MAPPO objective plus c * (S_pi + S_V) computed on
/// the real portion of each minibatch with a consistency element sampled per
/// minibatch from esp_rng. With augmentation off and c = 0 this is bitwise
/// identical to ppo_update under the same seed (esp_rng is untouched).
MetricsRecord esp_update(Policy& policy, Critic& critic, AdamState& opt_policy,
                         AdamState& opt_critic, RolloutBatch& batch,
                         const TrainerConfig& cfg, const EspConfig& esp_cfg,
                         const SymmetrySpec* spec, Rng& shuffle_rng,
                         Rng& esp_rng);

}  // namespace esp
