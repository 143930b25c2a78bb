#include "esp/mappo.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "esp/esp_layer.hpp"

namespace esp {

std::string MetricsRecord::csv_row() const {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                "%.17g,%.17g",
                static_cast<long long>(step), ep_reward_mean, ep_reward_stderr,
                policy_loss, value_loss, entropy, kl_old_new, clip_fraction,
                sym_policy_loss, sym_value_loss, ratio_max, wall_time_s);
  return buf;
}

MetricsWriter::MetricsWriter(const std::string& path) : out_(path) {
  if (!out_) throw std::runtime_error("MetricsWriter: cannot open " + path);
  out_ << MetricsRecord::csv_header() << "\n";
}

void MetricsWriter::append(const MetricsRecord& r) {
  out_ << r.csv_row() << "\n";
  out_.flush();
}

EnvPool::EnvPool(const Environment& env, int n_envs, uint64_t run_seed)
    : env_(&env), run_seed_(run_seed) {
  if (n_envs < 1) throw std::invalid_argument("EnvPool: n_envs >= 1");
  cur_.reserve(n_envs);
  for (int e = 0; e < n_envs; ++e) {
    episode_idx_.push_back(0);
    cur_.push_back(env.reset(mix64(run_seed, mix64(0xE0E0, e))));
    act_rng_.push_back(Rng::stream(run_seed, 0xAC7100 + e));
    running_return_.push_back(0.0);
  }
}

EnvPool::CollectResult EnvPool::collect(const Policy& policy,
                                        const Critic& critic, int horizon) {
  if (horizon < 1) throw std::invalid_argument("collect: horizon >= 1");
  CollectResult res;
  int n_envs = static_cast<int>(cur_.size());
  for (int e = 0; e < n_envs; ++e) {
    Trajectory traj;
    for (int t = 0; t < horizon; ++t) {
      Transition tr;
      tr.state = cur_[e];
      tr.value_pred = critic.value(tr.state.global);
      JointAction ja;
      tr.behavior_log_probs.resize(env_->n_agents());
      for (int i = 0; i < env_->n_agents(); ++i) {
        double lp = 0.0;
        ja.actions.push_back(policy.sample(tr.state.obs[i], act_rng_[e], &lp));
        tr.behavior_log_probs[i] = lp;
      }
      StepResult sr = env_->step(tr.state, ja);
      tr.joint_action = std::move(ja);
      tr.reward = sr.reward;
      tr.next_state = sr.next;
      tr.done = sr.terminal;
      running_return_[e] += sr.reward;

      bool chunk_end = sr.episode_end || sr.terminal || t + 1 == horizon;
      if (chunk_end) {
        tr.truncated = !sr.terminal;
        if (tr.truncated)
          tr.bootstrap_value = critic.value(sr.next.global);
      }
      traj.transitions.push_back(std::move(tr));

      if (sr.episode_end || sr.terminal) {
        res.completed_episode_returns.push_back(running_return_[e]);
        running_return_[e] = 0.0;
        episode_idx_[e] += 1;
        cur_[e] = env_->reset(
            mix64(run_seed_, mix64(0xE0E0 + episode_idx_[e], e)));
        if (t + 1 < horizon) {
          traj.recompute_return();
          traj.complete = true;
          res.trajectories.push_back(std::move(traj));
          traj = Trajectory{};
        } else {
          traj.complete = true;
        }
      } else {
        cur_[e] = std::move(sr.next);
      }
    }
    if (!traj.transitions.empty()) {
      traj.recompute_return();
      res.trajectories.push_back(std::move(traj));
    }
  }
  res.env_steps = static_cast<int64_t>(horizon) * n_envs;
  return res;
}

void gae_arrays(std::span<const double> rewards, std::span<const double> values,
                std::span<const uint8_t> dones, double bootstrap, double gamma,
                double lambda, std::span<double> advantages) {
  size_t n = rewards.size();
  if (values.size() != n || dones.size() != n || advantages.size() != n)
    throw std::invalid_argument("gae_arrays: length mismatch");
  double next_adv = 0.0;
  for (size_t k = n; k-- > 0;) {
    double nonterminal = dones[k] ? 0.0 : 1.0;
    double next_value = (k + 1 < n) ? values[k + 1] : bootstrap;
    double delta = rewards[k] + gamma * next_value * nonterminal - values[k];
    next_adv = delta + gamma * lambda * nonterminal * next_adv;
    advantages[k] = next_adv;
  }
}

void compute_gae(Trajectory& traj, double gamma, double lambda) {
  size_t n = traj.transitions.size();
  if (n == 0) return;
  std::vector<double> rewards(n), values(n), adv(n);
  std::vector<uint8_t> dones(n);
  for (size_t k = 0; k < n; ++k) {
    const Transition& t = traj.transitions[k];
    rewards[k] = t.reward;
    values[k] = t.value_pred;
    dones[k] = t.done ? 1 : 0;
  }
  double bootstrap = traj.transitions.back().done
                         ? 0.0
                         : traj.transitions.back().bootstrap_value;
  gae_arrays(rewards, values, dones, bootstrap, gamma, lambda, adv);
  for (size_t k = 0; k < n; ++k) {
    traj.transitions[k].advantage = adv[k];
    traj.transitions[k].value_target = adv[k] + values[k];
  }
}

void fill_value_predictions(Trajectory& traj, const Critic& critic) {
  for (Transition& t : traj.transitions) {
    t.value_pred = critic.value(t.state.global);
    if (t.truncated && !t.done)
      t.bootstrap_value = critic.value(t.next_state.global);
  }
}

int RolloutBatch::real_rows() const {
  int n = 0;
  for (uint8_t a : augmented)
    if (!a) ++n;
  return n;
}

RolloutBatch flatten_batch(const std::vector<Trajectory>& trajs,
                           const Environment& env) {
  RolloutBatch b;
  b.n_agents = env.n_agents();
  b.obs_dim = env.obs_dim();
  b.global_dim = env.global_dim();
  b.discrete = env.action_layout().discrete;
  for (const Trajectory& traj : trajs) {
    for (const Transition& t : traj.transitions) {
      for (int i = 0; i < b.n_agents; ++i) {
        const std::vector<double>& o = t.state.obs[i];
        if (static_cast<int>(o.size()) != b.obs_dim)
          throw std::invalid_argument("flatten_batch: observation dim mismatch");
        b.obs.insert(b.obs.end(), o.begin(), o.end());
        b.actions.push_back(t.joint_action.actions[i]);
        b.behavior_logp.push_back(t.behavior_log_probs[i]);
      }
      b.global_state.insert(b.global_state.end(), t.state.global.begin(),
                            t.state.global.end());
      b.rewards.push_back(t.reward);
      b.values.push_back(t.value_pred);
      b.advantages.push_back(t.advantage);
      b.targets.push_back(t.value_target);
      b.augmented.push_back(t.is_augmented ? 1 : 0);
      b.source_element.push_back(t.source_element);
    }
  }
  return b;
}

MetricsRecord ppo_update(Policy& policy, Critic& critic, AdamState& opt_policy,
                         AdamState& opt_critic, RolloutBatch& batch,
                         const TrainerConfig& cfg, Rng& shuffle_rng) {
  EspConfig off = EspConfig::disabled();
  Rng unused(0);  // never drawn from when ESP is disabled
  return esp_update(policy, critic, opt_policy, opt_critic, batch, cfg, off,
                    nullptr, shuffle_rng, unused);
}

}  // namespace esp
