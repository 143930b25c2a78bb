#pragma once

#include <string>
#include <vector>

#include "esp/group.hpp"

namespace esp {

/// Small enumerable symmetry Markov game with deterministic transitions.
/// sigma/tau are the group actions on state and joint-action indices.
struct FiniteGame {
  std::string name;
  int n_states = 0;
  int n_joint_actions = 0;
  std::vector<double> reward;   // [s * n_joint_actions + a]
  std::vector<int> transition;  // [s * n_joint_actions + a] -> s'
  double gamma = 0.9;
  int n_elements = 0;           // group order
  std::vector<int> cayley;      // [g * n_elements + h]
  int identity_element = 0;
  std::vector<int> sigma;       // [g * n_states + s] -> s'
  std::vector<int> tau;         // [g * n_joint_actions + a] -> a'

  double r(int s, int a) const { return reward[s * n_joint_actions + a]; }
  int next(int s, int a) const { return transition[s * n_joint_actions + a]; }
  int sig(int g, int s) const { return sigma[g * n_states + s]; }
  int ta(int g, int a) const { return tau[g * n_joint_actions + a]; }
};

/// Agents on an odd square grid centered at the origin, 5 moves
/// {stay, N, S, E, W}, reward -sum_i manhattan(agent_i, center) with a -1
/// penalty when two agents share a cell. The group action is the C4 rotation
/// of integer coordinates with the induced move permutation; all invariances
/// hold as exact table identities.
/// grid_side in {3, 5}; n_agents in {1, 2}.
FiniteGame build_grid_symmetry_game(int grid_side, int n_agents,
                                    double gamma = 0.9);

/// Negative control: same game plus a bonus when agent 0 sits in the NE
/// corner, which breaks reward invariance (and hence Proposition 1).
FiniteGame build_symmetry_broken_grid_game(int grid_side, int n_agents,
                                           double gamma = 0.9);

struct TableSymmetryReport {
  bool bijective = false;
  bool homomorphic = false;
  bool reward_invariant = false;
  bool transition_equivariant = false;
  std::string counterexample;
  bool pass() const {
    return bijective && homomorphic && reward_invariant &&
           transition_equivariant;
  }
  std::string to_text() const;
};

/// Exhaustively checks that sigma/tau are bijective homomorphisms and that
/// the reward/transition tables satisfy the invariance identities exactly.
TableSymmetryReport check_finite_game_symmetry(const FiniteGame& game);

/// Synchronous Q-iteration with the cooperative (max over joint actions)
/// backup. Returns Q with sup-norm Bellman residual <= tol. Throws a
/// diagnostic error if the residual cap is not reached within max_iters.
std::vector<double> value_iteration(const FiniteGame& game, double tol,
                                    int max_iters = 1000000,
                                    std::vector<double>* residual_trace = nullptr);

struct EquivalenceReport {
  bool pass = false;
  double max_deviation = 0.0;
  double tolerance = 0.0;
  int witness_state = -1;
  int witness_action = -1;
  int witness_element = -1;
  std::string to_text() const;
};

/// Max over (s, a, g) of |Q[s][a] - Q[sigma_g(s)][tau_g(a)]|; passes iff
/// <= tol. Q should come from value_iteration at tolerance <= tol/10.
EquivalenceReport verify_optimal_value_equivalence(const FiniteGame& game,
                                                   const std::vector<double>& q,
                                                   double tol);

}  // namespace esp
