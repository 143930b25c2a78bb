#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "esp/environments.hpp"
#include "esp/mappo.hpp"
#include "esp/policy.hpp"
#include "test_util.hpp"

using namespace esp;

TEST_CASE("reward invariance checker on shipped environments") {
  auto env = make_cooperative_navigation(3);
  SymmetrySpec spec = default_symmetry_spec(*env, "c4");
  InvarianceReport r = check_reward_invariance(*env, spec, 1000, 1);
  CHECK(r.pass);
  CHECK(r.max_deviation <= 1e-9);
  CHECK(r.n_samples == 1000);
  CHECK_THROWS_AS(check_reward_invariance(*env, spec, 0, 1),
                  std::invalid_argument);
}

TEST_CASE("transition equivariance checker on shipped environments") {
  auto env = make_predator_prey(3);
  SymmetrySpec spec = default_symmetry_spec(*env, "c4");
  InvarianceReport r = check_transition_equivariance(*env, spec, 1000, 2);
  CHECK(r.pass);
  CHECK(r.max_deviation <= 1e-6);
}

TEST_CASE("negative-control fixtures fail with witnesses") {
  auto asym = make_reward_asymmetric_fixture();
  SymmetrySpec spec_a = default_symmetry_spec(*asym, "c4");
  InvarianceReport ra = check_reward_invariance(*asym, spec_a, 1000, 3);
  CHECK_FALSE(ra.pass);
  CHECK(ra.max_deviation > 0.1);
  CHECK(ra.witness_sample >= 0);
  CHECK(ra.witness_element > 0);
  CHECK_FALSE(ra.witness_text.empty());

  auto wind = make_wind_fixture();
  SymmetrySpec spec_w = default_symmetry_spec(*wind, "c4");
  InvarianceReport rw = check_transition_equivariance(*wind, spec_w, 500, 4);
  CHECK_FALSE(rw.pass);
  CHECK(rw.max_deviation > 1e-6);
  CHECK(rw.witness_sample >= 0);
}

namespace {

/// Minimal stochastic stub to exercise the unsupported-check contract.
class StochasticStub : public Environment {
 public:
  std::string name() const override { return "stochastic_stub"; }
  int n_agents() const override { return 1; }
  int episode_len() const override { return 5; }
  double reward_bound() const override { return 1.0; }
  bool stochastic() const override { return true; }
  const ObservationLayout& obs_layout() const override { return layout_; }
  const ObservationLayout& global_layout() const override { return layout_; }
  const ActionLayout& action_layout() const override { return act_; }
  EnvState reset(uint64_t) const override {
    EnvState s;
    s.global = {0.0, 0.0};
    s.obs = {{0.0, 0.0}};
    return s;
  }
  StepResult step(const EnvState& s, const JointAction&) const override {
    StepResult r;
    r.next = s;
    r.next.t = s.t + 1;
    r.episode_end = r.next.t >= 5;
    return r;
  }
  std::vector<std::vector<double>> observe(
      std::span<const double> g) const override {
    return {{g[0], g[1]}};
  }

 private:
  ObservationLayout layout_ = ObservationLayout::geometric2d(1);
  ActionLayout act_ =
      attach_group(ActionLayout::discrete_moves(esp::testing::kMoves),
                   make_group("c4"));
};

}  // namespace

TEST_CASE("stochastic environments are rejected by the transition checker") {
  StochasticStub env;
  SymmetrySpec spec(make_group("c4"), env);
  CHECK_THROWS_AS(check_transition_equivariance(env, spec, 10, 5),
                  std::invalid_argument);
}

TEST_CASE("symmetry spec element resolution") {
  auto env = make_cooperative_navigation(3);
  SymmetrySpec spec = default_symmetry_spec(*env, "d4");
  CHECK(spec.group->order() == 8);
  CHECK(spec.non_identity_ids().size() == 7);
  std::vector<int> ids = spec.element_ids({"r90", "flipx"});
  CHECK(ids.size() == 2);
  CHECK(spec.group->element(ids[1]).kind == GroupElement::Kind::reflection);
  CHECK_THROWS_AS(spec.element_ids({"r45"}), std::invalid_argument);
}

TEST_CASE("trajectory invariants from the collector") {
  auto env = make_cooperative_navigation(3);
  Policy policy(env->obs_dim(), {16}, env->action_layout(), 21);
  Critic critic(env->global_dim(), {16}, 21);
  EnvPool pool(*env, 2, 99);
  auto col = pool.collect(policy, critic, 60);

  CHECK(col.env_steps == 120);
  int total_transitions = 0;
  for (const Trajectory& t : col.trajectories) {
    total_transitions += static_cast<int>(t.transitions.size());
    double sum = 0.0;
    for (size_t k = 0; k < t.transitions.size(); ++k) {
      const Transition& tr = t.transitions[k];
      sum += tr.reward;
      // done only on the final transition (never, for these tasks)
      if (k + 1 < t.transitions.size()) {
        CHECK_FALSE(tr.done);
        CHECK_FALSE(tr.truncated);
      }
      CHECK_FALSE(tr.is_augmented);
      CHECK(tr.source_element == -1);
      for (double lp : tr.behavior_log_probs) CHECK(lp <= 0.0);
    }
    CHECK(t.episode_return == doctest::Approx(sum).epsilon(1e-9));
    // 25-step episodes inside a 60-step horizon: trailing chunk is cut
    CHECK(t.transitions.back().truncated);
  }
  CHECK(total_transitions == 120);

  // episodes completed: 2 full episodes per env
  CHECK(col.completed_episode_returns.size() == 4);
}

TEST_CASE("collector determinism and behavior log-prob recompute") {
  auto env = make_predator_prey(3);
  Policy policy(env->obs_dim(), {16}, env->action_layout(), 5);
  Critic critic(env->global_dim(), {16}, 5);

  EnvPool a(*env, 2, 7), b(*env, 2, 7);
  auto ca = a.collect(policy, critic, 30);
  auto cb = b.collect(policy, critic, 30);
  REQUIRE(ca.trajectories.size() == cb.trajectories.size());
  for (size_t i = 0; i < ca.trajectories.size(); ++i) {
    const auto& ta = ca.trajectories[i].transitions;
    const auto& tb = cb.trajectories[i].transitions;
    REQUIRE(ta.size() == tb.size());
    for (size_t k = 0; k < ta.size(); ++k) {
      CHECK(ta[k].state.global == tb[k].state.global);
      CHECK(ta[k].joint_action.actions == tb[k].joint_action.actions);
      CHECK(ta[k].behavior_log_probs == tb[k].behavior_log_probs);
      CHECK(ta[k].reward == tb[k].reward);
    }
  }

  // stored behavior log-prob equals a recompute from the stored pair
  for (const Trajectory& t : ca.trajectories)
    for (const Transition& tr : t.transitions)
      for (int i = 0; i < env->n_agents(); ++i) {
        double lp =
            policy.log_prob(tr.state.obs[i], tr.joint_action.actions[i]);
        CHECK(std::fabs(lp - tr.behavior_log_probs[i]) <= 1e-12);
      }
}

TEST_CASE("invariance report serialization") {
  auto env = make_cooperative_navigation(3);
  SymmetrySpec spec = default_symmetry_spec(*env, "c4");
  InvarianceReport r = check_reward_invariance(*env, spec, 50, 6);
  std::string text = r.to_text();
  CHECK(text.find("reward_invariance") != std::string::npos);
  CHECK(text.find("PASS") != std::string::npos);
}
