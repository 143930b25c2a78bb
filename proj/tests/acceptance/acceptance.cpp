// Acceptance suite: one criterion per numbered check, each printed as a
// single PASS/FAIL line with its measured quantities. Run all criteria with
// no arguments, or a single one with --criterion N.

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>

#include "esp/esp_layer.hpp"
#include "esp/gradcheck.hpp"
#include "esp/harness.hpp"
#include "esp/tabular.hpp"

using namespace esp;
namespace fs = std::filesystem;

namespace {

const std::vector<Vec2> kMoves = {{0, 0}, {1, 0}, {-1, 0}, {0, 1}, {0, -1}};

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  }
};

fs::path work_dir() {
  fs::path p = fs::temp_directory_path() / "esp_acceptance";
  fs::create_directories(p);
  return p;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

/// metrics.csv minus the wall_time_s column (the single measured,
/// non-deterministic column).
std::string strip_wall_time(const std::string& csv) {
  std::istringstream is(csv);
  std::ostringstream os;
  std::string line;
  while (std::getline(is, line)) {
    size_t comma = line.rfind(',');
    os << (comma == std::string::npos ? line : line.substr(0, comma)) << "\n";
  }
  return os.str();
}

ExperimentConfig base_config(const std::string& env, const std::string& algo,
                             int64_t steps, uint64_t seed,
                             const fs::path& out) {
  ExperimentConfig cfg;
  cfg.env_name = env;
  cfg.algorithm = algo;
  cfg.total_steps = steps;
  cfg.eval_every = steps;  // final evaluation only
  cfg.eval_episodes = 50;
  cfg.seed = seed;
  cfg.out_dir = out.string();
  return cfg;
}

struct SeedStats {
  std::vector<double> finals;
  double mean = 0.0;
  double stderr_of_mean = 0.0;
};

SeedStats run_arm(const ExperimentConfig& proto, int n_seeds,
                  const fs::path& dir, std::ostream& log) {
  SeedStats s;
  for (int k = 0; k < n_seeds; ++k) {
    ExperimentConfig cfg = proto;
    cfg.seed = proto.seed + static_cast<uint64_t>(k);
    cfg.out_dir = (dir / ("seed" + std::to_string(cfg.seed))).string();
    TrainResult r = train(cfg, log);
    s.finals.push_back(r.final_eval.mean);
  }
  for (double v : s.finals) s.mean += v;
  s.mean /= s.finals.size();
  double var = 0.0;
  for (double v : s.finals) var += (v - s.mean) * (v - s.mean);
  if (s.finals.size() > 1)
    s.stderr_of_mean = std::sqrt(var / (s.finals.size() - 1) /
                                 static_cast<double>(s.finals.size()));
  return s;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

// --------------------------------------------------------------------------
// criterion 1: group correctness
// --------------------------------------------------------------------------
bool criterion_1(std::ostream& out) {
  Timer timer;
  bool ok = true;
  for (const std::string& name : {"c1", "c4", "c8", "d4"}) {
    AxiomReport ax = check_group_axioms(make_group(name));
    if (!ax.pass()) {
      out << "  axioms fail for " << name << ": " << ax.to_text() << "\n";
      ok = false;
    }
  }

  Rng rng(20230601);
  double worst_rep = 0.0, worst_rt = 0.0;
  ObservationLayout layout;
  layout.add_geometric().add_geometric().add_invariant(3).add_geometric();
  ActionLayout cont = ActionLayout::continuous2d();
  for (const std::string& name : {"c1", "c4", "c8", "d4"}) {
    Group g = make_group(name);
    for (const GroupElement& a : g.elements())
      for (const GroupElement& b : g.elements())
        worst_rep = std::max(worst_rep,
                             (a.rep * b.rep).max_abs_diff(g.compose(a, b).rep));
    ActionLayout discrete;
    bool has_perms = (name != "c8");
    if (has_perms)
      discrete = attach_group(ActionLayout::discrete_moves(kMoves), g);
    for (int k = 0; k < 2500; ++k) {
      std::vector<double> s(layout.total_len());
      for (double& v : s) v = rng.uniform(-3.0, 3.0);
      for (const GroupElement& e : g.elements()) {
        std::vector<double> fwd = apply_state_transform(e, s, layout);
        std::vector<double> back =
            apply_state_transform(g.inverse(e), fwd, layout);
        for (size_t i = 0; i < s.size(); ++i)
          worst_rt = std::max(worst_rt, std::fabs(back[i] - s[i]));
        Vec2 v{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
        Vec2 w = std::get<Vec2>(apply_action_transform(
            g.inverse(e), apply_action_transform(e, Action{v}, cont), cont));
        worst_rt = std::max(
            {worst_rt, std::fabs(w.x - v.x), std::fabs(w.y - v.y)});
        if (has_perms) {
          int ai = static_cast<int>(rng.randint(5));
          Action f = apply_action_transform(e, Action{ai}, discrete);
          if (std::get<int>(apply_action_transform(g.inverse(e), f,
                                                   discrete)) != ai)
            worst_rt = std::max(worst_rt, 1.0);
        }
      }
    }
  }
  double secs = timer.seconds();
  ok = ok && worst_rep < 1e-12 && worst_rt < 1e-12 && secs < 1.0;
  out << "  rep_homomorphism_dev=" << fmt(worst_rep)
      << " roundtrip_dev=" << fmt(worst_rt) << " runtime=" << fmt(secs)
      << "s (limit 1s)\n";
  return ok;
}

// --------------------------------------------------------------------------
// criterion 2: symmetry Markov game conditions
// --------------------------------------------------------------------------
bool criterion_2(std::ostream& out) {
  Timer timer;
  bool ok = true;
  struct Case {
    std::string env, group;
  };
  for (const Case& c :
       {Case{"coop_nav", "c4"}, Case{"coop_nav", "d4"},
        Case{"predator_prey", "c4"}, Case{"predator_prey", "d4"},
        Case{"formation_change", "c4"}}) {
    auto env = make_environment(c.env);
    SymmetrySpec spec = default_symmetry_spec(*env, c.group);
    InvarianceReport rr = check_reward_invariance(*env, spec, 1000, 101);
    InvarianceReport rt = check_transition_equivariance(*env, spec, 1000, 102);
    out << "  " << c.env << "/" << c.group
        << ": reward_dev=" << fmt(rr.max_deviation)
        << " transition_dev=" << fmt(rt.max_deviation) << "\n";
    ok = ok && rr.pass && rt.pass;
  }
  {
    auto env = make_reward_asymmetric_fixture();
    SymmetrySpec spec = default_symmetry_spec(*env, "c4");
    InvarianceReport r = check_reward_invariance(*env, spec, 1000, 103);
    bool controls_ok = !r.pass && r.witness_sample >= 0;
    out << "  negative control (reward): dev=" << fmt(r.max_deviation)
        << " witness_sample=" << r.witness_sample << "\n";
    ok = ok && controls_ok;
  }
  {
    auto env = make_wind_fixture();
    SymmetrySpec spec = default_symmetry_spec(*env, "c4");
    InvarianceReport r = check_transition_equivariance(*env, spec, 1000, 104);
    bool controls_ok = !r.pass && r.witness_sample >= 0;
    out << "  negative control (transition): dev=" << fmt(r.max_deviation)
        << " witness_sample=" << r.witness_sample << "\n";
    ok = ok && controls_ok;
  }
  double secs = timer.seconds();
  out << "  runtime=" << fmt(secs) << "s (limit 30s)\n";
  return ok && secs < 30.0;
}

// --------------------------------------------------------------------------
// criterion 3: Proposition 1 oracle
// --------------------------------------------------------------------------
bool criterion_3(std::ostream& out) {
  Timer timer;
  bool ok = true;
  for (auto [side, agents] : {std::pair{3, 2}, std::pair{5, 1}}) {
    FiniteGame g = build_grid_symmetry_game(side, agents);
    if (!check_finite_game_symmetry(g).pass()) {
      out << "  table symmetry fails for " << g.name << "\n";
      ok = false;
    }
    std::vector<double> q = value_iteration(g, 1e-10);
    EquivalenceReport rep = verify_optimal_value_equivalence(g, q, 1e-8);
    out << "  " << g.name << ": max_dev=" << fmt(rep.max_deviation)
        << (rep.pass ? " (pass)" : " (FAIL)") << "\n";
    ok = ok && rep.pass;
  }
  FiniteGame broken = build_symmetry_broken_grid_game(3, 2);
  std::vector<double> qb = value_iteration(broken, 1e-10);
  EquivalenceReport rb = verify_optimal_value_equivalence(broken, qb, 1e-8);
  out << "  " << broken.name << ": max_dev=" << fmt(rb.max_deviation)
      << " (must fail: " << (rb.pass ? "UNEXPECTED PASS" : "fails as required")
      << ")\n";
  ok = ok && !rb.pass;
  double secs = timer.seconds();
  out << "  runtime=" << fmt(secs) << "s (limit 60s)\n";
  return ok && secs < 60.0;
}

// --------------------------------------------------------------------------
// criterion 4: numerical core
// --------------------------------------------------------------------------
bool criterion_4(std::ostream& out) {
  bool ok = true;
  GradCheckSummary gs = run_gradient_checks(100, 20230602);
  for (const auto& [name, err] : gs.max_rel_err) {
    out << "  gradcheck " << name << ": max_rel_err=" << fmt(err) << "\n";
    ok = ok && err < 1e-4;
  }

  // GAE vs the O(T^2) direct-sum oracle
  Rng rng(20230603);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    size_t n = 1 + rng.randint(12);
    std::vector<double> rewards(n), values(n), adv(n);
    std::vector<uint8_t> dones(n, 0);
    for (size_t t = 0; t < n; ++t) {
      rewards[t] = rng.uniform(-2.0, 2.0);
      values[t] = rng.uniform(-2.0, 2.0);
      dones[t] = rng.uniform() < 0.15 ? 1 : 0;
    }
    double bootstrap = rng.uniform(-2.0, 2.0);
    double gamma = rng.uniform(0.8, 0.999);
    double lambda = rng.uniform(0.0, 1.0);
    gae_arrays(rewards, values, dones, bootstrap, gamma, lambda, adv);
    // direct sum with termination masks
    for (size_t t = 0; t < n; ++t) {
      double expect = 0.0, coef = 1.0;
      for (size_t l = t; l < n; ++l) {
        double next_v = (l + 1 < n) ? values[l + 1] : bootstrap;
        double delta =
            rewards[l] + gamma * next_v * (dones[l] ? 0.0 : 1.0) - values[l];
        expect += coef * delta;
        if (dones[l]) break;
        coef *= gamma * lambda;
      }
      worst = std::max(worst, std::fabs(adv[t] - expect));
    }
  }
  out << "  gae_vs_oracle: max_abs_dev=" << fmt(worst)
      << " over 1000 trajectories\n";
  return ok && worst < 1e-10;
}

// --------------------------------------------------------------------------
// criterion 5: degeneration to the baseline
// --------------------------------------------------------------------------
bool criterion_5(std::ostream& out) {
  fs::path dir = work_dir() / "c5";
  fs::remove_all(dir);
  std::ostringstream log;

  ExperimentConfig a = base_config("coop_nav", "mappo", 1600, 700, dir / "mappo");
  a.trainer.n_envs = 4;
  a.trainer.horizon = 100;
  a.eval_episodes = 8;
  ExperimentConfig b = a;
  b.algorithm = "mappo_esp";
  b.out_dir = (dir / "esp_off").string();
  b.esp.c = 0.0;
  b.esp.augment_enabled = false;
  b.esp.loss_enabled = false;
  train(a, log);
  train(b, log);

  std::string ma = strip_wall_time(read_file(dir / "mappo" / "metrics.csv"));
  std::string mb = strip_wall_time(read_file(dir / "esp_off" / "metrics.csv"));
  bool metrics_equal = !ma.empty() && ma == mb;
  bool eval_equal = read_file(dir / "mappo" / "eval.csv") ==
                    read_file(dir / "esp_off" / "eval.csv");
  out << "  metrics bit-identical (wall_time_s column excluded): "
      << (metrics_equal ? "yes" : "NO") << "; eval identical: "
      << (eval_equal ? "yes" : "NO") << "\n";
  return metrics_equal && eval_equal;
}

// --------------------------------------------------------------------------
// criterion 6: equivariant fixed points
// --------------------------------------------------------------------------
bool criterion_6(std::ostream& out) {
  SymmetrySpec spec(make_group("c4"), ObservationLayout::geometric2d(1),
                    ActionLayout::discrete_moves(kMoves),
                    ObservationLayout::geometric2d(1));

  auto make_policy = [&]() {
    Policy p(2, {}, ActionLayout::discrete_moves(kMoves), 0);
    for (double& v : p.params.values) v = 0.0;
    auto w = p.params.span("pi.W0");
    for (int a = 0; a < 5; ++a) {
      w[2 * a] = 1.5 * kMoves[a].x;
      w[2 * a + 1] = 1.5 * kMoves[a].y;
    }
    return p;
  };
  auto make_critic = [&]() {
    Critic c(2, {}, 0);
    for (double& v : c.params.values) v = 0.0;
    c.params.span("v.b0")[0] = 0.3;
    return c;
  };

  // synthetic single-agent batch on the fixture layout
  auto make_fixture_batch = [&](const Policy& policy) {
    Rng rng(601);
    RolloutBatch b;
    b.n_agents = 1;
    b.obs_dim = 2;
    b.global_dim = 2;
    b.discrete = true;
    for (int r = 0; r < 64; ++r) {
      std::vector<double> o = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
      b.obs.insert(b.obs.end(), o.begin(), o.end());
      b.global_state.insert(b.global_state.end(), o.begin(), o.end());
      double lp = 0.0;
      b.actions.push_back(policy.sample(o, rng, &lp));
      b.behavior_logp.push_back(lp);
      b.rewards.push_back(0.0);
      b.values.push_back(0.0);
      b.advantages.push_back(rng.uniform(-1.0, 1.0));
      b.targets.push_back(0.1 * rng.uniform(-1.0, 1.0));
      b.augmented.push_back(0);
      b.source_element.push_back(-1);
    }
    return b;
  };

  Policy probe = make_policy();
  Critic flat = make_critic();
  RolloutBatch batch = make_fixture_batch(probe);

  double worst_spi = 0.0, worst_sv = 0.0;
  for (int gid : spec.non_identity_ids()) {
    worst_spi = std::max(
        worst_spi,
        std::fabs(symmetry_policy_loss(probe, batch, spec,
                                       spec.group->element(gid),
                                       EspConfig::KlDirection::kAsWritten)));
    worst_sv = std::max(worst_sv,
                        std::fabs(symmetry_value_loss(
                            flat, batch, spec, spec.group->element(gid))));
  }
  out << "  S_pi=" << fmt(worst_spi) << " S_V=" << fmt(worst_sv)
      << " at the equivariant/invariant fixtures (tol 1e-9)\n";

  // one full-batch update with and without the consistency terms
  TrainerConfig cfg;
  cfg.epochs = 1;
  cfg.minibatches = 1;
  auto run = [&](bool with_loss) {
    Policy policy = make_policy();
    Critic critic = make_critic();
    RolloutBatch b = make_fixture_batch(policy);
    AdamState op(policy.params.size()), ov(critic.params.size());
    Rng shuffle(602), esp_rng(603);
    EspConfig e;
    e.augment_enabled = false;
    e.loss_enabled = with_loss;
    e.c = with_loss ? 0.5 : 0.0;
    e.consistency_elements = {"r90", "r180", "r270"};
    esp_update(policy, critic, op, ov, b, cfg, e, &spec, shuffle, esp_rng);
    return std::pair{policy.params.values, critic.params.values};
  };
  auto [p_on, c_on] = run(true);
  auto [p_off, c_off] = run(false);
  double worst_delta = 0.0;
  for (size_t i = 0; i < p_on.size(); ++i)
    worst_delta = std::max(worst_delta, std::fabs(p_on[i] - p_off[i]));
  for (size_t i = 0; i < c_on.size(); ++i)
    worst_delta = std::max(worst_delta, std::fabs(c_on[i] - c_off[i]));
  out << "  max parameter-delta gap vs baseline update: " << fmt(worst_delta)
      << " (tol 1e-9)\n";
  return worst_spi < 1e-9 && worst_sv < 1e-9 && worst_delta < 1e-9;
}

// --------------------------------------------------------------------------
// criterion 7: the unsound-ratio motivation
// --------------------------------------------------------------------------
bool criterion_7(std::ostream& out) {
  Timer timer;
  SymmetrySpec spec(make_group("c4"), ObservationLayout::geometric2d(1),
                    ActionLayout::discrete_moves(kMoves),
                    ObservationLayout::geometric2d(1));

  // Small weight scale keeps the tuned policy's residual logit offsets below
  // the rounding threshold where exp() returns exactly 1, while the fresh
  // asymmetry still exceeds the 1e-6 ratio margin by orders of magnitude.
  Policy policy(2, {}, ActionLayout::discrete_moves(kMoves), 7001);
  Rng rng(7002);
  for (double& v : policy.params.values) v += 0.01 * rng.normal();

  RolloutBatch batch;
  batch.n_agents = 1;
  batch.obs_dim = 2;
  batch.global_dim = 2;
  batch.discrete = true;
  std::vector<double> obs_matrix;
  for (int r = 0; r < 64; ++r) {
    std::vector<double> o = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    obs_matrix.insert(obs_matrix.end(), o.begin(), o.end());
    batch.obs.insert(batch.obs.end(), o.begin(), o.end());
    batch.global_state.insert(batch.global_state.end(), o.begin(), o.end());
    double lp = 0.0;
    batch.actions.push_back(policy.sample(o, rng, &lp));
    batch.behavior_logp.push_back(lp);
    batch.rewards.push_back(0.0);
    batch.values.push_back(0.0);
    batch.advantages.push_back(0.0);
    batch.targets.push_back(0.0);
    batch.augmented.push_back(0);
    batch.source_element.push_back(-1);
  }

  double fresh_max = 0.0;
  for (int gid : spec.non_identity_ids())
    fresh_max = std::max(
        fresh_max,
        ratio_diagnostic(policy, batch, spec, spec.group->element(gid)).max);
  bool fresh_ok = fresh_max > 1.0 + 1e-6;
  out << "  fresh policy: max ratio=" << fmt(fresh_max)
      << " (must exceed 1+1e-6)\n";

  // Loss-driven fine-tuning to equivariance: full-batch gradient descent on
  // S_pi, cycling through the non-identity elements.
  std::vector<double> grad(policy.params.size(), 0.0);
  std::vector<int> elems = spec.non_identity_ids();
  int iters = 0;
  bool exact = false;
  while (timer.seconds() < 55.0 && iters < 200000) {
    for (int gid : elems) {
      std::fill(grad.begin(), grad.end(), 0.0);
      Graph g(policy.params, grad);
      int loss = build_sym_policy_loss(g, policy, obs_matrix, 64, spec,
                                       spec.group->element(gid),
                                       EspConfig::KlDirection::kAsWritten);
      g.backward(loss);
      for (int i = 0; i < policy.params.size(); ++i)
        policy.params.values[i] -= 0.5 * grad[i];
    }
    ++iters;
    if (iters % 250 == 0) {
      // recompute stored behavior log-probs under the tuned policy before
      // checking: the diagnostic compares against pi_theta_old = the tuned
      // policy itself
      bool all_one = true;
      for (int r = 0; r < 64 && all_one; ++r) {
        std::span<const double> o(batch.obs.data() + 2 * r, 2);
        batch.behavior_logp[r] = policy.log_prob(o, batch.actions[r]);
      }
      for (int gid : elems) {
        RatioSummary rs =
            ratio_diagnostic(policy, batch, spec, spec.group->element(gid));
        if (rs.max != 1.0 || rs.min != 1.0) {
          all_one = false;
          break;
        }
      }
      if (all_one) {
        exact = true;
        break;
      }
    }
  }
  // refresh behavior log-probs one final time for the reported numbers
  for (int r = 0; r < 64; ++r) {
    std::span<const double> o(batch.obs.data() + 2 * r, 2);
    batch.behavior_logp[r] = policy.log_prob(o, batch.actions[r]);
  }
  double tuned_max = 1.0, tuned_min = 1.0;
  for (int gid : elems) {
    RatioSummary rs =
        ratio_diagnostic(policy, batch, spec, spec.group->element(gid));
    tuned_max = std::max(tuned_max, rs.max);
    tuned_min = std::min(tuned_min, rs.min);
  }
  double secs = timer.seconds();
  out << "  after " << iters << " fine-tune iterations (" << fmt(secs)
      << "s): ratios in [" << fmt(tuned_min) << ", " << fmt(tuned_max)
      << "] (must be exactly 1)\n";
  return fresh_ok && exact && tuned_max == 1.0 && tuned_min == 1.0 &&
         secs < 60.0;
}

// --------------------------------------------------------------------------
// criterion 8: directional learning-curve claim (cooperative navigation)
// --------------------------------------------------------------------------
bool criterion_8(std::ostream& out) {
  fs::path dir = work_dir() / "c8";
  std::ostringstream log;
  const int n_seeds = 5;
  const int64_t steps = 150000;

  auto directional = [&](const std::string& env, bool gating) {
    ExperimentConfig base =
        base_config(env, "mappo", steps, 9000, dir / env / "mappo");
    ExperimentConfig esp_cfg = base;
    esp_cfg.algorithm = "mappo_esp";
    esp_cfg.esp.augment_enabled = true;
    esp_cfg.esp.augmentation_elements = {"r90"};
    esp_cfg.esp.loss_enabled = true;
    esp_cfg.esp.c = 0.5;
    esp_cfg.out_dir = (dir / env / "esp").string();

    SeedStats b = run_arm(base, n_seeds, dir / env / "mappo", log);
    SeedStats e = run_arm(esp_cfg, n_seeds, dir / env / "esp", log);
    out << "  [" << env << "] mappo: " << fmt(b.mean) << " +- "
        << fmt(b.stderr_of_mean) << "  {";
    for (double v : b.finals) out << " " << fmt(v);
    out << " }\n";
    out << "  [" << env << "] esp:   " << fmt(e.mean) << " +- "
        << fmt(e.stderr_of_mean) << "  {";
    for (double v : e.finals) out << " " << fmt(v);
    out << " }\n";
    double diff = e.mean - b.mean;
    out << "  [" << env << "] seed-mean difference (esp - mappo) = "
        << fmt(diff) << (gating ? " [gating]" : " [soft, reported only]")
        << "\n";
    return diff > 0.0;
  };

  bool cn_ok = directional("coop_nav", true);

  // sanity: a trained checkpoint beats a random-init policy
  auto env = make_environment("coop_nav");
  Policy fresh(env->obs_dim(), {64, 64}, env->action_layout(), 999);
  EvalResult random_eval = evaluate_policy(fresh, *env, 50, 9000);
  EvalResult trained_eval = evaluate_checkpoint(
      (dir / "coop_nav" / "esp" / "seed9000" / "ckpt_final.bin").string(), 50,
      9000);
  out << "  random-init eval " << fmt(random_eval.mean) << " vs trained "
      << fmt(trained_eval.mean) << "\n";
  bool trained_beats_random = trained_eval.mean > random_eval.mean;

  bool pp_ok = directional("predator_prey", false);
  out << "  predator_prey soft check: "
      << (pp_ok ? "positive" : "not positive") << " (non-gating)\n";
  return cn_ok && trained_beats_random;
}

// --------------------------------------------------------------------------
// criterion 9: ablation structure
// --------------------------------------------------------------------------
bool criterion_9(std::ostream& out) {
  fs::path dir = work_dir() / "c9";
  std::ostringstream log;
  const int n_seeds = 3;
  const int64_t steps = 150000;  // matched to the criterion-8 budget

  auto arm = [&](const std::string& name, bool aug, bool loss,
                 const std::string& group,
                 std::vector<std::string> aug_elems) {
    ExperimentConfig cfg =
        base_config("coop_nav", "mappo_esp", steps, 9100, dir / name);
    cfg.esp.augment_enabled = aug;
    cfg.esp.loss_enabled = loss;
    cfg.esp.c = 0.5;
    cfg.esp.group = group;
    cfg.esp.augmentation_elements = std::move(aug_elems);
    cfg.esp.consistency_elements = {"r90"};
    return run_arm(cfg, n_seeds, dir / name, log);
  };

  SeedStats baseline = arm("baseline", false, false, "c4", {"r90"});
  SeedStats aug_only = arm("aug_only", true, false, "c4", {"r90"});
  SeedStats loss_only = arm("loss_only", false, true, "c4", {"r90"});
  SeedStats both = arm("esp_both", true, true, "c4", {"r90"});
  SeedStats rot_only = arm("rotation_only", true, false, "c4", {"r90", "r180"});
  SeedStats rot_flip =
      arm("rotation_flip", true, false, "d4", {"r90", "flipx"});

  auto report = [&](const std::string& name, const SeedStats& s) {
    out << "  " << name << ": " << fmt(s.mean) << " +- "
        << fmt(s.stderr_of_mean) << "\n";
  };
  report("baseline      ", baseline);
  report("aug_only      ", aug_only);
  report("loss_only     ", loss_only);
  report("esp_both      ", both);
  report("rotation_only ", rot_only);
  report("rotation_flip ", rot_flip);

  out << "  reported orderings: both>=aug_only:"
      << (both.mean >= aug_only.mean ? "yes" : "no")
      << " both>=loss_only:" << (both.mean >= loss_only.mean ? "yes" : "no")
      << " aug_only>=baseline:"
      << (aug_only.mean >= baseline.mean ? "yes" : "no")
      << " loss_only>=baseline:"
      << (loss_only.mean >= baseline.mean ? "yes" : "no")
      << " rot_flip>=rot_only:"
      << (rot_flip.mean >= rot_only.mean ? "yes" : "no") << "\n";
  bool gate = both.mean >= baseline.mean;
  out << "  gating comparison esp_both >= baseline: "
      << (gate ? "yes" : "NO") << "\n";
  return gate;
}

// --------------------------------------------------------------------------
// criterion 10: reproducibility and persistence
// --------------------------------------------------------------------------
bool criterion_10(std::ostream& out) {
  fs::path dir = work_dir() / "c10";
  fs::remove_all(dir);
  std::ostringstream log;
  ExperimentConfig a =
      base_config("coop_nav", "mappo_esp", 3200, 1000, dir / "a");
  a.trainer.n_envs = 4;
  a.trainer.horizon = 100;
  a.eval_episodes = 10;
  ExperimentConfig b = a;
  b.out_dir = (dir / "b").string();
  train(a, log);
  train(b, log);
  std::string ma = strip_wall_time(read_file(dir / "a" / "metrics.csv"));
  std::string mb = strip_wall_time(read_file(dir / "b" / "metrics.csv"));
  bool repro = !ma.empty() && ma == mb &&
               read_file(dir / "a" / "eval.csv") ==
                   read_file(dir / "b" / "eval.csv");
  out << "  identical (config, seed) runs produce identical metrics/eval: "
      << (repro ? "yes" : "NO") << " (wall_time_s column excluded)\n";

  // checkpoint round-trip preserves evaluation exactly
  Checkpoint c = Checkpoint::load((dir / "a" / "ckpt_final.bin").string());
  auto env = make_environment(c.env_name, c.n_agents);
  EvalResult direct = evaluate_policy(c.policy, *env, 20, 424242);
  fs::path copy = dir / "copy.bin";
  c.save(copy.string());
  EvalResult loaded = evaluate_checkpoint(copy.string(), 20, 424242);
  bool ckpt_ok = direct.mean == loaded.mean &&
                 direct.stderr_of_mean == loaded.stderr_of_mean &&
                 direct.risky_rate == loaded.risky_rate;
  out << "  checkpoint save/load evaluation: direct=" << fmt(direct.mean)
      << " loaded=" << fmt(loaded.mean) << " ("
      << (ckpt_ok ? "exact match" : "MISMATCH") << ")\n";
  return repro && ckpt_ok;
}

struct CriterionEntry {
  int id;
  const char* name;
  std::function<bool(std::ostream&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<CriterionEntry> criteria = {
      {1, "group correctness (axioms, representation, round-trips)",
       criterion_1},
      {2, "symmetry Markov game conditions with negative controls",
       criterion_2},
      {3, "optimal value equivalence oracle (tabular)", criterion_3},
      {4, "numerical core (gradient checks, GAE oracle)", criterion_4},
      {5, "degeneration: ESP-off is bitwise the baseline", criterion_5},
      {6, "equivariant fixed points of the consistency losses", criterion_6},
      {7, "unsound-ratio diagnostic before/after equivariance", criterion_7},
      {8, "directional learning-curve claim at 150k steps", criterion_8},
      {9, "ablation structure (modules and transform types)", criterion_9},
      {10, "reproducibility and checkpoint persistence", criterion_10},
  };

  int only = -1;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc)
      only = std::atoi(argv[++i]);
  }

  int failures = 0;
  for (const CriterionEntry& c : criteria) {
    if (only > 0 && c.id != only) continue;
    std::ostringstream detail;
    bool ok = false;
    try {
      ok = c.run(detail);
    } catch (const std::exception& e) {
      detail << "  exception: " << e.what() << "\n";
    }
    std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << c.id << ": "
              << c.name << "\n"
              << detail.str();
    std::cout.flush();
    if (!ok) ++failures;
  }
  return failures;
}
