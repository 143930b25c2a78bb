#include "esp/esp_layer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace esp {

void EspConfig::validate() const {
  if (c < 0.0)
    throw std::invalid_argument("esp.c must be >= 0");
  if (kl_direction != KlDirection::kAsWritten &&
      kl_direction != KlDirection::kReversed)
    throw std::invalid_argument("esp.kl_direction invalid");
}

std::vector<int> resolve_elements(const SymmetrySpec& spec,
                                  const std::vector<std::string>& names,
                                  bool default_all_non_identity) {
  if (names.empty() && default_all_non_identity)
    return spec.non_identity_ids();
  std::vector<int> ids;
  for (const std::string& n : names) {
    const GroupElement& e = spec.group->element_by_name(n);
    if (e.is_identity())
      throw std::invalid_argument(
          "element list must not contain the identity ('" + n + "')");
    ids.push_back(e.id);
  }
  return ids;
}

namespace {

std::vector<double> transform_obs_matrix(const std::vector<double>& obs,
                                         int rows, const GroupElement& g,
                                         const ObservationLayout& layout) {
  int dim = layout.total_len();
  std::vector<double> out(obs.size());
  for (int r = 0; r < rows; ++r) {
    std::span<const double> in_row(obs.data() + static_cast<size_t>(r) * dim,
                                   dim);
    std::span<double> out_row(out.data() + static_cast<size_t>(r) * dim, dim);
    apply_state_transform_inplace(g, in_row, layout, out_row);
  }
  return out;
}

Mat2 inverse_rep(const GroupElement& g) {
  // Orthogonal representation: inverse = transpose.
  return g.rep.transpose();
}

}  // namespace

std::vector<Trajectory> augment_trajectory(const Trajectory& traj,
                                           const SymmetrySpec& spec,
                                           const std::vector<int>& element_ids,
                                           const Policy& behavior_policy) {
  std::vector<Trajectory> out;
  out.reserve(element_ids.size());
  for (int gid : element_ids) {
    const GroupElement& g = spec.group->element(gid);
    Trajectory tg;
    tg.complete = traj.complete;
    tg.transitions.reserve(traj.transitions.size());
    for (const Transition& t : traj.transitions) {
      Transition t2;
      t2.state.t = t.state.t;
      t2.state.global =
          apply_state_transform(g, t.state.global, spec.global_layout);
      t2.state.obs.reserve(t.state.obs.size());
      for (const std::vector<double>& o : t.state.obs)
        t2.state.obs.push_back(apply_state_transform(g, o, spec.obs_layout));
      t2.next_state.t = t.next_state.t;
      t2.next_state.global =
          apply_state_transform(g, t.next_state.global, spec.global_layout);
      t2.next_state.obs.reserve(t.next_state.obs.size());
      for (const std::vector<double>& o : t.next_state.obs)
        t2.next_state.obs.push_back(
            apply_state_transform(g, o, spec.obs_layout));
      t2.joint_action.actions.reserve(t.joint_action.actions.size());
      for (const Action& a : t.joint_action.actions)
        t2.joint_action.actions.push_back(
            apply_action_transform(g, a, spec.act_layout));
      t2.reward = t.reward;
      t2.done = t.done;
      t2.truncated = t.truncated;
      t2.is_augmented = !g.is_identity();
      t2.source_element = gid;
      // The PPO ratio for augmented data starts at 1: the behavior log-prob
      // is re-evaluated on the transformed pair rather than copied.
      t2.behavior_log_probs.resize(t2.state.obs.size());
      for (size_t i = 0; i < t2.state.obs.size(); ++i)
        t2.behavior_log_probs[i] = behavior_policy.log_prob(
            t2.state.obs[i], t2.joint_action.actions[i]);
      tg.transitions.push_back(std::move(t2));
    }
    tg.recompute_return();
    out.push_back(std::move(tg));
  }
  return out;
}

double validate_augmentation(const Environment& env, const Trajectory& original,
                             const Trajectory& augmented,
                             const SymmetrySpec& spec) {
  if (original.transitions.size() != augmented.transitions.size())
    throw std::invalid_argument("validate_augmentation: length mismatch");
  double worst = 0.0;
  for (size_t k = 0; k < augmented.transitions.size(); ++k) {
    const Transition& t = augmented.transitions[k];
    if (t.reward != original.transitions[k].reward)
      worst = std::max(
          worst, std::fabs(t.reward - original.transitions[k].reward));
    StepResult sr = env.step(t.state, t.joint_action);
    for (size_t i = 0; i < t.next_state.global.size(); ++i)
      worst = std::max(
          worst, std::fabs(sr.next.global[i] - t.next_state.global[i]));
    worst = std::max(worst, std::fabs(sr.reward - t.reward));
  }
  return worst;
}

PpoPolicyLossGraph build_ppo_policy_loss(
    Graph& g, const Policy& policy, const std::vector<double>& obs, int rows,
    const std::vector<Action>& actions,
    const std::vector<double>& behavior_logp,
    const std::vector<double>& advantages, double clip, double entropy_coef) {
  PpoPolicyLossGraph out;
  int x = g.input(obs, rows, policy.obs_dim());
  int head = policy.build_head(g, x);
  int logp_a;
  int entropy_rows;
  if (policy.discrete()) {
    int logp_all = g.log_softmax_rows(head);
    std::vector<int> idx(rows);
    for (int r = 0; r < rows; ++r) idx[r] = std::get<int>(actions[r]);
    logp_a = g.gather_cols(logp_all, idx);
    entropy_rows = g.neg(g.row_dot(g.exp_(logp_all), logp_all));
  } else {
    std::vector<double> act(2 * static_cast<size_t>(rows));
    for (int r = 0; r < rows; ++r) {
      Vec2 v = std::get<Vec2>(actions[r]);
      act[2 * r] = v.x;
      act[2 * r + 1] = v.y;
    }
    int a_in = g.input(act, rows, 2);
    int ls = policy.build_log_std(g, rows);
    int z = g.mul(g.sub(a_in, head), g.exp_(g.neg(ls)));
    int quad = g.scale(g.row_sum(g.square(z)), -0.5);
    int norm = g.neg(g.row_sum(ls));
    logp_a = g.add_scalar(g.add(quad, norm), -std::log(2.0 * M_PI));
    entropy_rows =
        g.add_scalar(g.row_sum(ls), std::log(2.0 * M_PI * M_E));
  }
  int b_in = g.input(behavior_logp, rows, 1);
  int adv_in = g.input(advantages, rows, 1);
  int ratio = g.exp_(g.sub(logp_a, b_in));
  out.ratios = g.value(ratio);
  int t1 = g.mul(ratio, adv_in);
  int t2 = g.mul(g.clamp_(ratio, 1.0 - clip, 1.0 + clip), adv_in);
  out.surrogate = g.mean_all(g.min_(t1, t2));
  out.entropy = g.mean_all(entropy_rows);
  out.loss = g.sub(g.neg(out.surrogate), g.scale(out.entropy, entropy_coef));
  return out;
}

int build_value_loss(Graph& g, const Critic& critic,
                     const std::vector<double>& globals, int rows,
                     const std::vector<double>& targets) {
  int x = g.input(globals, rows, critic.input_dim());
  int v = critic.build_values(g, x);
  int t = g.input(targets, rows, 1);
  return g.mean_all(g.square(g.sub(v, t)));
}

int build_policy_entropy(Graph& g, const Policy& policy,
                         const std::vector<double>& obs, int rows) {
  int x = g.input(obs, rows, policy.obs_dim());
  int head = policy.build_head(g, x);
  if (policy.discrete()) {
    int logp_all = g.log_softmax_rows(head);
    return g.mean_all(g.neg(g.row_dot(g.exp_(logp_all), logp_all)));
  }
  int ls = policy.build_log_std(g, rows);
  return g.mean_all(
      g.add_scalar(g.row_sum(ls), std::log(2.0 * M_PI * M_E)));
}

int build_sym_policy_loss(Graph& g, const Policy& policy,
                          const std::vector<double>& obs, int rows,
                          const SymmetrySpec& spec, const GroupElement& elem,
                          EspConfig::KlDirection dir) {
  std::vector<double> obs_t =
      transform_obs_matrix(obs, rows, elem, spec.obs_layout);
  int x_o = g.input(obs, rows, policy.obs_dim());
  int x_t = g.input(obs_t, rows, policy.obs_dim());
  int head_o = policy.build_head(g, x_o);
  int head_t = policy.build_head(g, x_t);

  if (policy.discrete()) {
    if (!spec.act_layout.has_perms())
      throw std::invalid_argument("build_sym_policy_loss: no permutations");
    // q(a) = pi(K_g[a] | L_g[s]): pull the transformed head back through K_g.
    int q_logits = g.permute_cols(head_t, spec.act_layout.perms.at(elem.id));
    int logp = g.log_softmax_rows(head_o);
    int logq = g.log_softmax_rows(q_logits);
    int kl_rows;
    if (dir == EspConfig::KlDirection::kAsWritten)
      kl_rows = g.row_dot(g.exp_(logq), g.sub(logq, logp));
    else
      kl_rows = g.row_dot(g.exp_(logp), g.sub(logp, logq));
    return g.mean_all(kl_rows);
  }

  // Continuous: pull the transformed mean back through K_g^{-1}; the global
  // log-std is shared by both branches (treated as rotation-invariant).
  Mat2 inv = inverse_rep(elem);
  int mean_q = g.rotate2(head_t, inv.a, inv.b, inv.c, inv.d);
  int mean_p = head_o;
  int ls = policy.build_log_std(g, rows);
  int mu1 = (dir == EspConfig::KlDirection::kAsWritten) ? mean_q : mean_p;
  int mu2 = (dir == EspConfig::KlDirection::kAsWritten) ? mean_p : mean_q;
  // Diagonal-Gaussian KL with ls1 = ls2 = ls; the variance-ratio and log
  // terms are kept so gradients flow through the std parameter as well.
  int var_ratio = g.exp_(g.scale(g.sub(ls, ls), 2.0));  // exp(2(ls1-ls2)) = 1
  int dm2 = g.square(g.sub(mu1, mu2));
  int inv_two_var2 = g.scale(g.exp_(g.scale(ls, -2.0)), 0.5);
  int kl_elem = g.add_scalar(
      g.add(g.scale(var_ratio, 0.5), g.mul(dm2, inv_two_var2)), -0.5);
  return g.mean_all(g.row_sum(kl_elem));
}

int build_sym_value_loss(Graph& g, const Critic& critic,
                         const std::vector<double>& globals, int rows,
                         const SymmetrySpec& spec, const GroupElement& elem) {
  std::vector<double> globals_t =
      transform_obs_matrix(globals, rows, elem, spec.global_layout);
  int x_o = g.input(globals, rows, critic.input_dim());
  int x_t = g.input(globals_t, rows, critic.input_dim());
  int v_o = critic.build_values(g, x_o);
  int v_t = critic.build_values(g, x_t);
  return g.mean_all(g.square(g.sub(v_o, v_t)));
}

namespace {

/// Gathers the per-agent rows of the given transition indices into a dense
/// [n*agents x obs_dim] matrix plus parallel action/logp/advantage arrays.
struct AgentRows {
  std::vector<double> obs;
  std::vector<Action> actions;
  std::vector<double> behavior_logp;
  std::vector<double> advantages;
  int rows = 0;
};

AgentRows gather_agent_rows(const RolloutBatch& batch,
                            const std::vector<int>& rows,
                            const std::vector<double>& norm_adv) {
  AgentRows out;
  out.rows = static_cast<int>(rows.size()) * batch.n_agents;
  out.obs.reserve(static_cast<size_t>(out.rows) * batch.obs_dim);
  out.actions.reserve(out.rows);
  out.behavior_logp.reserve(out.rows);
  out.advantages.reserve(out.rows);
  for (int r : rows) {
    for (int k = 0; k < batch.n_agents; ++k) {
      size_t ar = static_cast<size_t>(r) * batch.n_agents + k;
      const double* o = batch.obs.data() + ar * batch.obs_dim;
      out.obs.insert(out.obs.end(), o, o + batch.obs_dim);
      out.actions.push_back(batch.actions[ar]);
      out.behavior_logp.push_back(batch.behavior_logp[ar]);
      out.advantages.push_back(norm_adv[r]);
    }
  }
  return out;
}

std::vector<double> gather_globals(const RolloutBatch& batch,
                                   const std::vector<int>& rows) {
  std::vector<double> out;
  out.reserve(rows.size() * static_cast<size_t>(batch.global_dim));
  for (int r : rows) {
    const double* g = batch.global_state.data() +
                      static_cast<size_t>(r) * batch.global_dim;
    out.insert(out.end(), g, g + batch.global_dim);
  }
  return out;
}

}  // namespace

double symmetry_policy_loss(const Policy& policy, const RolloutBatch& batch,
                            const SymmetrySpec& spec, const GroupElement& elem,
                            EspConfig::KlDirection dir) {
  std::vector<double> scratch_grad(policy.params.size(), 0.0);
  Graph g(policy.params, scratch_grad);
  int rows = batch.n_rows() * batch.n_agents;
  int node = build_sym_policy_loss(g, policy, batch.obs, rows, spec, elem, dir);
  return g.scalar(node);
}

double symmetry_value_loss(const Critic& critic, const RolloutBatch& batch,
                           const SymmetrySpec& spec, const GroupElement& elem) {
  std::vector<double> scratch_grad(critic.params.size(), 0.0);
  Graph g(critic.params, scratch_grad);
  int node = build_sym_value_loss(g, critic, batch.global_state, batch.n_rows(),
                                  spec, elem);
  return g.scalar(node);
}

RatioSummary ratio_diagnostic(const Policy& behavior_policy,
                              const RolloutBatch& batch,
                              const SymmetrySpec& spec,
                              const GroupElement& elem) {
  RatioSummary s;
  std::vector<double> ratios;
  std::vector<double> h_o(behavior_policy.n_actions());
  std::vector<double> h_t(behavior_policy.n_actions());
  for (int r = 0; r < batch.n_rows(); ++r) {
    if (batch.augmented[r]) continue;
    for (int k = 0; k < batch.n_agents; ++k) {
      size_t ar = static_cast<size_t>(r) * batch.n_agents + k;
      std::span<const double> obs(batch.obs.data() + ar * batch.obs_dim,
                                  static_cast<size_t>(batch.obs_dim));
      std::vector<double> obs_t =
          apply_state_transform(elem, obs, spec.obs_layout);
      Action a_t =
          apply_action_transform(elem, batch.actions[ar], spec.act_layout);
      if (batch.discrete) {
        // Factored form exp(shift difference) * (z_o / z_t): identical
        // distributions give exactly 1 without going through log-space
        // rounding.
        behavior_policy.head(obs, h_o);
        behavior_policy.head(obs_t, h_t);
        double m_o, z_o, m_t, z_t;
        categorical_shift_z(h_o, m_o, z_o);
        categorical_shift_z(h_t, m_t, z_t);
        int ao = std::get<int>(batch.actions[ar]);
        int at = std::get<int>(a_t);
        ratios.push_back(std::exp((h_t[at] - m_t) - (h_o[ao] - m_o)) *
                         (z_o / z_t));
      } else {
        double lp_t = behavior_policy.log_prob(obs_t, a_t);
        double lp_o = behavior_policy.log_prob(obs, batch.actions[ar]);
        ratios.push_back(std::exp(lp_t - lp_o));
      }
    }
  }
  if (ratios.empty()) return s;
  std::sort(ratios.begin(), ratios.end());
  s.n = static_cast<int>(ratios.size());
  s.min = ratios.front();
  s.max = ratios.back();
  double sum = 0.0;
  for (double v : ratios) sum += v;
  s.mean = sum / s.n;
  s.p99 = ratios[std::min<size_t>(ratios.size() - 1,
                                  static_cast<size_t>(0.99 * ratios.size()))];
  return s;
}

MetricsRecord esp_update(Policy& policy, Critic& critic, AdamState& opt_policy,
                         AdamState& opt_critic, RolloutBatch& batch,
                         const TrainerConfig& cfg, const EspConfig& esp_cfg,
                         const SymmetrySpec* spec, Rng& shuffle_rng,
                         Rng& esp_rng) {
  esp_cfg.validate();
  const bool loss_active = esp_cfg.loss_active();
  if (loss_active && spec == nullptr)
    throw std::invalid_argument("esp_update: consistency loss needs a spec");
  std::vector<int> consistency_ids;
  if (loss_active)
    consistency_ids =
        resolve_elements(*spec, esp_cfg.consistency_elements, true);

  MetricsRecord rec;
  int n = batch.n_rows();
  if (n == 0) throw std::invalid_argument("esp_update: empty batch");

  // Advantages normalized once per update batch.
  double mean = 0.0;
  for (double a : batch.advantages) mean += a;
  mean /= n;
  double var = 0.0;
  for (double a : batch.advantages) var += (a - mean) * (a - mean);
  double stdev = std::sqrt(var / n);
  batch.norm_advantages.resize(n);
  std::vector<double>& norm_adv = batch.norm_advantages;
  for (int r = 0; r < n; ++r)
    norm_adv[r] = (batch.advantages[r] - mean) / (stdev + 1e-8);

  // Diagnostics evaluated on the pre-update (behavior) policy.
  if (esp_cfg.active() && spec != nullptr) {
    int diag_gid = -1;
    if (esp_cfg.augment_enabled && !esp_cfg.augmentation_elements.empty())
      diag_gid = resolve_elements(*spec, esp_cfg.augmentation_elements, false)[0];
    else if (!consistency_ids.empty())
      diag_gid = consistency_ids[0];
    if (diag_gid >= 0) {
      RatioSummary rs =
          ratio_diagnostic(policy, batch, *spec, spec->group->element(diag_gid));
      rec.ratio_max = rs.max;
    }
  }

  Policy old_policy = policy;  // exact KL(old||new) after the update

  std::vector<int> order(n);
  for (int r = 0; r < n; ++r) order[r] = r;

  std::vector<double> grad_pi(policy.params.size());
  std::vector<double> grad_vf(critic.params.size());
  double acc_policy_loss = 0.0, acc_value_loss = 0.0, acc_entropy = 0.0;
  double acc_sym_pi = 0.0, acc_sym_v = 0.0;
  int64_t clip_hits = 0, ratio_count = 0;
  int n_minibatch_passes = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (int mb = 0; mb < cfg.minibatches; ++mb) {
      int lo = static_cast<int>(static_cast<int64_t>(mb) * n / cfg.minibatches);
      int hi = static_cast<int>(static_cast<int64_t>(mb + 1) * n /
                                cfg.minibatches);
      if (hi <= lo) continue;
      std::vector<int> rows(order.begin() + lo, order.begin() + hi);

      const GroupElement* elem = nullptr;
      std::vector<int> real_rows;
      if (loss_active) {
        int gid = consistency_ids[esp_rng.randint(consistency_ids.size())];
        elem = &spec->group->element(gid);
        for (int r : rows)
          if (!batch.augmented[r]) real_rows.push_back(r);
      }

      // ---- policy step ----
      AgentRows ar = gather_agent_rows(batch, rows, norm_adv);
      std::fill(grad_pi.begin(), grad_pi.end(), 0.0);
      {
        Graph g(policy.params, grad_pi);
        PpoPolicyLossGraph ppo = build_ppo_policy_loss(
            g, policy, ar.obs, ar.rows, ar.actions, ar.behavior_logp,
            ar.advantages, cfg.clip, cfg.entropy_coef);
        int loss = ppo.loss;
        if (elem != nullptr && !real_rows.empty()) {
          AgentRows real = gather_agent_rows(batch, real_rows, norm_adv);
          int sym = build_sym_policy_loss(g, policy, real.obs, real.rows, *spec,
                                          *elem, esp_cfg.kl_direction);
          loss = g.add(loss, g.scale(sym, esp_cfg.c));
          acc_sym_pi += g.scalar(sym);
        }
        g.backward(loss);
        acc_policy_loss += -g.scalar(ppo.surrogate);
        acc_entropy += g.scalar(ppo.entropy);
        for (double rv : ppo.ratios)
          if (std::fabs(rv - 1.0) > cfg.clip) ++clip_hits;
        ratio_count += static_cast<int64_t>(ppo.ratios.size());
      }
      adam_step(policy.params, grad_pi, opt_policy, cfg.adam());

      // ---- critic step ----
      std::vector<double> globals = gather_globals(batch, rows);
      std::vector<double> targets;
      targets.reserve(rows.size());
      for (int r : rows) targets.push_back(batch.targets[r]);
      std::fill(grad_vf.begin(), grad_vf.end(), 0.0);
      {
        Graph g(critic.params, grad_vf);
        int vloss = build_value_loss(g, critic, globals,
                                     static_cast<int>(rows.size()), targets);
        int loss = vloss;
        if (elem != nullptr && !real_rows.empty()) {
          std::vector<double> real_globals = gather_globals(batch, real_rows);
          int sym = build_sym_value_loss(g, critic, real_globals,
                                         static_cast<int>(real_rows.size()),
                                         *spec, *elem);
          loss = g.add(loss, g.scale(sym, esp_cfg.c));
          acc_sym_v += g.scalar(sym);
        }
        g.backward(loss);
        acc_value_loss += g.scalar(vloss);
      }
      adam_step(critic.params, grad_vf, opt_critic, cfg.adam());

      ++n_minibatch_passes;
    }
  }

  // Exact mean KL(pi_old || pi_new) over all (transition, agent) rows.
  double kl_sum = 0.0;
  int64_t kl_count = 0;
  {
    std::vector<double> h_old(policy.n_actions()), h_new(policy.n_actions());
    std::vector<double> ls_old, ls_new;
    if (!policy.discrete()) {
      ls_old = old_policy.log_std_clamped();
      ls_new = policy.log_std_clamped();
    }
    for (int r = 0; r < n; ++r)
      for (int k = 0; k < batch.n_agents; ++k) {
        size_t arow = static_cast<size_t>(r) * batch.n_agents + k;
        std::span<const double> obs(batch.obs.data() + arow * batch.obs_dim,
                                    static_cast<size_t>(batch.obs_dim));
        old_policy.head(obs, h_old);
        policy.head(obs, h_new);
        if (policy.discrete())
          kl_sum += categorical_kl(h_old, h_new);
        else
          kl_sum += gaussian_kl(h_old, ls_old, h_new, ls_new);
        ++kl_count;
      }
  }

  rec.policy_loss = acc_policy_loss / n_minibatch_passes;
  rec.value_loss = acc_value_loss / n_minibatch_passes;
  rec.entropy = acc_entropy / n_minibatch_passes;
  rec.kl_old_new = kl_sum / static_cast<double>(kl_count);
  rec.clip_fraction =
      ratio_count ? static_cast<double>(clip_hits) / ratio_count : 0.0;
  rec.sym_policy_loss = loss_active ? acc_sym_pi / n_minibatch_passes : 0.0;
  rec.sym_value_loss = loss_active ? acc_sym_v / n_minibatch_passes : 0.0;
  return rec;
}

}  // namespace esp
