#include "esp/markov_game.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace esp {

Action Environment::random_action(Rng& rng) const {
  const ActionLayout& l = action_layout();
  if (l.discrete) return Action{static_cast<int>(rng.randint(l.n_actions))};
  return Action{Vec2{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)}};
}

SymmetrySpec::SymmetrySpec(Group g, const Environment& env)
    : group(std::make_shared<Group>(std::move(g))),
      obs_layout(env.obs_layout()),
      act_layout(attach_group(env.action_layout(), *group)),
      global_layout(env.global_layout()) {
  if (obs_layout.total_len() != env.obs_dim() ||
      global_layout.total_len() != env.global_dim())
    throw std::invalid_argument("SymmetrySpec: layout/environment mismatch");
}

SymmetrySpec::SymmetrySpec(Group g, ObservationLayout obs, ActionLayout act,
                           ObservationLayout global)
    : group(std::make_shared<Group>(std::move(g))),
      obs_layout(std::move(obs)),
      global_layout(std::move(global)) {
  act_layout = attach_group(act, *group);
}

std::vector<int> SymmetrySpec::element_ids(
    const std::vector<std::string>& names) const {
  std::vector<int> ids;
  ids.reserve(names.size());
  for (const std::string& n : names) ids.push_back(group->element_by_name(n).id);
  return ids;
}

std::vector<int> SymmetrySpec::non_identity_ids() const {
  std::vector<int> ids;
  for (const GroupElement& e : group->elements())
    if (!e.is_identity()) ids.push_back(e.id);
  return ids;
}

std::string InvarianceReport::to_text() const {
  std::ostringstream os;
  os << check_name << ": " << (pass ? "PASS" : "FAIL")
     << "  max_dev=" << max_deviation << " tol=" << tolerance
     << " samples=" << n_samples;
  if (!pass && witness_sample >= 0)
    os << "\n  witness: sample=" << witness_sample
       << " element=" << witness_element << " " << witness_text;
  return os.str();
}

namespace {

/// Rolls a uniform-random policy and hands each visited (s, a) to `visit`.
template <typename Fn>
void sample_reachable_pairs(const Environment& env, int num_samples,
                            uint64_t seed, Fn&& visit) {
  Rng rng = Rng::stream(seed, 0x5a31);
  uint64_t episode = 0;
  EnvState s = env.reset(splitmix64(episode));
  for (int k = 0; k < num_samples; ++k) {
    JointAction a;
    for (int i = 0; i < env.n_agents(); ++i)
      a.actions.push_back(env.random_action(rng));
    visit(k, s, a);
    StepResult r = env.step(s, a);
    if (r.episode_end || r.terminal) {
      s = env.reset(splitmix64(episode));
    } else {
      s = std::move(r.next);
    }
  }
}

EnvState transform_state(const EnvState& s, const GroupElement& g,
                         const Environment& env, const SymmetrySpec& spec) {
  EnvState out;
  out.global = apply_state_transform(g, s.global, spec.global_layout);
  out.obs = env.observe(out.global);
  out.t = s.t;
  return out;
}

JointAction transform_action(const JointAction& a, const GroupElement& g,
                             const SymmetrySpec& spec) {
  JointAction out;
  out.actions.reserve(a.actions.size());
  for (const Action& ai : a.actions)
    out.actions.push_back(apply_action_transform(g, ai, spec.act_layout));
  return out;
}

}  // namespace

InvarianceReport check_reward_invariance(const Environment& env,
                                         const SymmetrySpec& spec,
                                         int num_samples, uint64_t seed) {
  if (num_samples < 1)
    throw std::invalid_argument("check_reward_invariance: num_samples >= 1");
  InvarianceReport rep;
  rep.check_name = "reward_invariance(" + env.name() + ", " +
                   spec.group->name() + ")";
  rep.tolerance = 1e-9;
  rep.n_samples = num_samples;

  sample_reachable_pairs(env, num_samples, seed, [&](int k, const EnvState& s,
                                                     const JointAction& a) {
    double r = env.step(s, a).reward;
    for (int gid : spec.non_identity_ids()) {
      const GroupElement& g = spec.group->element(gid);
      EnvState sg = transform_state(s, g, env, spec);
      JointAction ag = transform_action(a, g, spec);
      double rg = env.step(sg, ag).reward;
      double dev = std::fabs(r - rg);
      if (dev > rep.max_deviation) {
        rep.max_deviation = dev;
        rep.witness_sample = k;
        rep.witness_element = gid;
        std::ostringstream os;
        os << "R(s,a)=" << r << " R(Lg[s],Kg[a])=" << rg;
        rep.witness_text = os.str();
      }
    }
  });
  rep.pass = rep.max_deviation <= rep.tolerance;
  return rep;
}

InvarianceReport check_transition_equivariance(const Environment& env,
                                               const SymmetrySpec& spec,
                                               int num_samples,
                                               uint64_t seed) {
  if (env.stochastic())
    throw std::invalid_argument(
        "check_transition_equivariance: unsupported for stochastic "
        "environments (density-level check not implemented)");
  if (num_samples < 1)
    throw std::invalid_argument(
        "check_transition_equivariance: num_samples >= 1");
  InvarianceReport rep;
  rep.check_name = "transition_equivariance(" + env.name() + ", " +
                   spec.group->name() + ")";
  rep.tolerance = 1e-6;
  rep.n_samples = num_samples;

  sample_reachable_pairs(env, num_samples, seed, [&](int k, const EnvState& s,
                                                     const JointAction& a) {
    EnvState s1 = env.step(s, a).next;
    for (int gid : spec.non_identity_ids()) {
      const GroupElement& g = spec.group->element(gid);
      std::vector<double> lhs =
          apply_state_transform(g, s1.global, spec.global_layout);
      EnvState sg = transform_state(s, g, env, spec);
      JointAction ag = transform_action(a, g, spec);
      EnvState s2 = env.step(sg, ag).next;
      double dev = 0.0;
      for (size_t i = 0; i < lhs.size(); ++i)
        dev = std::max(dev, std::fabs(lhs[i] - s2.global[i]));
      if (dev > rep.max_deviation) {
        rep.max_deviation = dev;
        rep.witness_sample = k;
        rep.witness_element = gid;
        rep.witness_text = "sup-norm gap between Lg[s'] and step(Lg[s],Kg[a])";
      }
    }
  });
  rep.pass = rep.max_deviation <= rep.tolerance;
  return rep;
}

}  // namespace esp
