#pragma once

#include <memory>
#include <string>

#include "esp/markov_game.hpp"

namespace esp {

/// Shared particle kinematics: acceleration control with damping, a speed
/// cap, and positions clamped to a square arena. Per-coordinate clamping on
/// a square arena commutes with C4/D4, which the equivariance checkers
/// verify rather than assume.
struct PhysicsParams {
  double dt = 0.1;
  double damping = 0.25;
  double max_speed = 1.0;
  double accel_scale = 5.0;
  double arena_half_width = 1.0;
};

/// n agents cover n landmarks; team reward is the negative sum over
/// landmarks of the distance to the closest agent, minus 1 per colliding
/// agent pair. Discrete 5-action space, 25-step episodes.
std::unique_ptr<Environment> make_cooperative_navigation(int n_agents = 3);

/// n predators chase one scripted prey that flees its nearest predator.
/// +10 per step while any predator overlaps the prey, with a -0.1 * min
/// distance shaping term. Discrete actions, 25-step episodes.
std::unique_ptr<Environment> make_predator_prey(int n_predators = 3);

/// Robots spawned on a square's perimeter swap to antipodal goals around a
/// central circular obstacle. Continuous 2D acceleration actions, 50-step
/// episodes.
std::unique_ptr<Environment> make_formation_change(int n_robots = 8);

/// Factory used by the CLI: "coop_nav" | "predator_prey" | "formation_change".
/// n_agents = 0 selects the environment's default.
std::unique_ptr<Environment> make_environment(const std::string& name,
                                              int n_agents = 0);

/// Negative-control fixtures (deliberately symmetry-broken):
/// cooperative navigation with an absolute-position reward term,
std::unique_ptr<Environment> make_reward_asymmetric_fixture();
/// and with a constant +x wind force in the dynamics.
std::unique_ptr<Environment> make_wind_fixture();

/// Symmetry spec with the named group ("c4", "d4", ...) attached to the
/// environment's layouts.
SymmetrySpec default_symmetry_spec(const Environment& env,
                                   const std::string& group_name = "c4");

/// Fraction of steps in which some agent pair is closer than `threshold`
/// (the risky-state metric). Computed by evaluation rollouts.
double pairwise_proximity_fraction(const Environment& env,
                                   std::span<const double> global,
                                   double threshold);

/// Default risky-state center-distance threshold (arena units).
constexpr double kRiskyDistance = 0.25;

}  // namespace esp
