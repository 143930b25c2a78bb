#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "esp/layouts.hpp"
#include "esp/rng.hpp"

namespace esp {

/// Full simulator state plus the per-agent observations derived from it.
/// `t` is the in-episode step counter (not part of the geometric state).
struct EnvState {
  std::vector<double> global;
  std::vector<std::vector<double>> obs;
  int t = 0;
};

struct JointAction {
  std::vector<Action> actions;
};

struct StepResult {
  EnvState next;
  double reward = 0.0;
  /// True termination (absorbing). All shipped tasks end by truncation only.
  bool terminal = false;
  /// Episode reached its step limit.
  bool episode_end = false;
};

/// Deterministic cooperative Markov game. `reset` and `step` are pure:
/// all episode state lives in EnvState.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string name() const = 0;
  virtual int n_agents() const = 0;
  virtual int episode_len() const = 0;
  virtual double reward_bound() const = 0;
  virtual bool stochastic() const { return false; }

  virtual const ObservationLayout& obs_layout() const = 0;
  virtual const ObservationLayout& global_layout() const = 0;
  virtual const ActionLayout& action_layout() const = 0;

  virtual EnvState reset(uint64_t seed) const = 0;
  virtual StepResult step(const EnvState& state,
                          const JointAction& action) const = 0;

  /// Rebuilds per-agent observations from a global state vector.
  virtual std::vector<std::vector<double>> observe(
      std::span<const double> global) const = 0;

  int obs_dim() const { return obs_layout().total_len(); }
  int global_dim() const { return global_layout().total_len(); }

  /// Uniform random action for reachable-pair sampling.
  Action random_action(Rng& rng) const;
};

/// One (s, a, r, s') record; the unit of symmetry augmentation.
struct Transition {
  EnvState state;
  JointAction joint_action;
  std::vector<double> behavior_log_probs;  // log pi_old(a_i | obs_i)
  double reward = 0.0;
  EnvState next_state;
  bool done = false;       // true termination
  bool truncated = false;  // episode or rollout-chunk boundary
  bool is_augmented = false;
  int source_element = -1;  // group element id, -1 = none

  // Trainer annotations (filled by the collector / augmenter).
  double value_pred = 0.0;
  double bootstrap_value = 0.0;  // V(next_state) when truncated
  double advantage = 0.0;
  double value_target = 0.0;
};

struct Trajectory {
  std::vector<Transition> transitions;
  double episode_return = 0.0;

  void recompute_return() {
    episode_return = 0.0;
    for (const Transition& t : transitions) episode_return += t.reward;
  }
  /// True if the trajectory reached the environment's episode limit (its
  /// return is a full-episode return, not a chunk).
  bool complete = false;
};

/// Binds a symmetry group to an environment's layouts. Action permutations
/// are derived at construction.
struct SymmetrySpec {
  std::shared_ptr<const Group> group;
  ObservationLayout obs_layout;
  ActionLayout act_layout;  // with permutations attached
  ObservationLayout global_layout;

  SymmetrySpec() = default;
  SymmetrySpec(Group g, const Environment& env);
  /// Synthetic-layout spec (tests and fixtures).
  SymmetrySpec(Group g, ObservationLayout obs, ActionLayout act,
               ObservationLayout global);

  std::vector<int> element_ids(const std::vector<std::string>& names) const;
  std::vector<int> non_identity_ids() const;
};

struct InvarianceReport {
  std::string check_name;
  bool pass = false;
  double max_deviation = 0.0;
  double tolerance = 0.0;
  int n_samples = 0;
  // Worst witness
  int witness_sample = -1;
  int witness_element = -1;
  std::string witness_text;

  std::string to_text() const;
};

/// Samples reachable (s, a) pairs by rolling out a uniform-random policy and
/// reports max |R(s,a) - R(L_g[s], K_g[a])| over all non-identity g.
/// Passes iff the max deviation is <= 1e-9.
InvarianceReport check_reward_invariance(const Environment& env,
                                         const SymmetrySpec& spec,
                                         int num_samples, uint64_t seed);

/// For sampled (s, a) and each non-identity g, compares L_g[step(s,a)]
/// against step(L_g[s], K_g[a]) in sup norm. Passes iff <= 1e-6.
/// Throws for stochastic environments (density-level equivariance is out of
/// scope).
InvarianceReport check_transition_equivariance(const Environment& env,
                                               const SymmetrySpec& spec,
                                               int num_samples, uint64_t seed);

}  // namespace esp
