#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "esp/markov_game.hpp"
#include "esp/metrics.hpp"
#include "esp/policy.hpp"

namespace esp {

struct TrainerConfig {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip = 0.2;
  int epochs = 10;
  int minibatches = 4;
  double lr = 3e-4;
  double entropy_coef = 0.01;
  double max_grad_norm = 0.5;
  int n_envs = 8;
  int horizon = 200;
  std::vector<int> hidden = {64, 64};

  AdamConfig adam() const { return {lr, 0.9, 0.999, 1e-8, max_grad_norm}; }
};

/// Parallel-in-structure rollout state: n independent environment copies
/// with per-env RNG streams and per-env episode reset seeds, stepped in a
/// fixed order so collection is deterministic.
class EnvPool {
 public:
  EnvPool(const Environment& env, int n_envs, uint64_t run_seed);

  struct CollectResult {
    std::vector<Trajectory> trajectories;
    std::vector<double> completed_episode_returns;
    int64_t env_steps = 0;
  };

  /// Collects exactly `horizon` transitions per environment, splitting
  /// trajectories at episode boundaries and auto-resetting. Behavior
  /// log-probs and value predictions are recorded at collection time.
  CollectResult collect(const Policy& policy, const Critic& critic,
                        int horizon);

  const Environment& env() const { return *env_; }

 private:
  const Environment* env_;
  uint64_t run_seed_;
  std::vector<EnvState> cur_;
  std::vector<Rng> act_rng_;
  std::vector<uint64_t> episode_idx_;
  std::vector<double> running_return_;
};

/// Backward-recursive GAE over raw arrays. `dones[t]` marks s_{t+1} as
/// terminal; `bootstrap` is V(s_T) used past the end (ignored when the last
/// transition is terminal).
void gae_arrays(std::span<const double> rewards, std::span<const double> values,
                std::span<const uint8_t> dones, double bootstrap, double gamma,
                double lambda, std::span<double> advantages);

/// Fills advantage and value_target (= advantage + value_pred) per
/// transition.
void compute_gae(Trajectory& traj, double gamma, double lambda);

/// Recomputes value_pred (and the bootstrap value on a truncated tail) with
/// the given critic; used for augmented trajectories.
void fill_value_predictions(Trajectory& traj, const Critic& critic);

/// Flattened update batch: one row per transition, agents kept as an inner
/// axis of the per-agent arrays.
struct RolloutBatch {
  int n_agents = 0;
  int obs_dim = 0;
  int global_dim = 0;
  bool discrete = true;

  std::vector<double> obs;            // [row * n_agents + k][obs_dim]
  std::vector<double> global_state;   // [row][global_dim]
  std::vector<Action> actions;        // [row * n_agents + k]
  std::vector<double> behavior_logp;  // [row * n_agents + k]
  std::vector<double> rewards;        // [row]
  std::vector<double> values;         // [row]
  std::vector<double> advantages;     // [row]
  std::vector<double> norm_advantages;  // [row], filled by the update
  std::vector<double> targets;        // [row]
  std::vector<uint8_t> augmented;     // [row]
  std::vector<int> source_element;    // [row]

  int n_rows() const { return static_cast<int>(rewards.size()); }
  int real_rows() const;
};

/// Requires compute_gae to have run on every trajectory.
RolloutBatch flatten_batch(const std::vector<Trajectory>& trajs,
                           const Environment& env);

/// Plain MAPPO update (clipped surrogate + entropy bonus on the shared
/// policy, squared error on the centralized critic). Implemented as the ESP
/// update with the symmetry machinery disabled, so the two are bitwise
/// identical when ESP is off.
MetricsRecord ppo_update(Policy& policy, Critic& critic, AdamState& opt_policy,
                         AdamState& opt_critic, RolloutBatch& batch,
                         const TrainerConfig& cfg, Rng& shuffle_rng);

}  // namespace esp
