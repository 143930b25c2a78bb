#include "esp/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>

#include <json.hpp>

namespace esp {

namespace fs = std::filesystem;

std::filesystem::path resolve_out_dir(const std::string& out_dir) {
  fs::path p(out_dir);
  const char* root = std::getenv("ESP_OUT_ROOT");
  if (root != nullptr && *root != '\0' && p.is_relative())
    return fs::path(root) / p;
  return p;
}

namespace {

struct MeanStderr {
  double mean = std::nan("");
  double stderr_of_mean = std::nan("");
};

MeanStderr mean_stderr(const std::vector<double>& xs) {
  MeanStderr r;
  if (xs.empty()) return r;
  double sum = 0.0;
  for (double x : xs) sum += x;
  r.mean = sum / xs.size();
  if (xs.size() == 1) {
    r.stderr_of_mean = 0.0;
    return r;
  }
  double var = 0.0;
  for (double x : xs) var += (x - r.mean) * (x - r.mean);
  var /= (xs.size() - 1);
  r.stderr_of_mean = std::sqrt(var / xs.size());
  return r;
}

Checkpoint make_checkpoint(const ExperimentConfig& cfg, int64_t step,
                           const Policy& policy, const Critic& critic,
                           const AdamState& opt_pi, const AdamState& opt_vf,
                           const Rng& shuffle_rng, const Rng& esp_rng) {
  Checkpoint c;
  c.env_name = cfg.env_name;
  c.n_agents = cfg.n_agents;
  c.algorithm = cfg.algorithm;
  c.hidden = cfg.trainer.hidden;
  c.step = step;
  c.policy = policy;
  c.critic = critic;
  c.opt_policy = opt_pi;
  c.opt_critic = opt_vf;
  c.rng_states["shuffle"] = shuffle_rng.serialize();
  c.rng_states["esp"] = esp_rng.serialize();
  return c;
}

}  // namespace

EvalResult evaluate_policy(const Policy& policy, const Environment& env,
                           int episodes, uint64_t seed) {
  if (episodes < 1)
    throw std::invalid_argument("evaluate: episodes must be >= 1");
  std::vector<double> returns;
  returns.reserve(episodes);
  double risky = 0.0;
  int64_t steps = 0;
  for (int e = 0; e < episodes; ++e) {
    EnvState s = env.reset(mix64(seed, 0xEBA10000ULL + e));
    double ret = 0.0;
    while (true) {
      JointAction ja;
      for (int i = 0; i < env.n_agents(); ++i)
        ja.actions.push_back(policy.greedy(s.obs[i]));
      StepResult sr = env.step(s, ja);
      ret += sr.reward;
      risky += pairwise_proximity_fraction(env, sr.next.global, kRiskyDistance);
      ++steps;
      if (sr.episode_end || sr.terminal) break;
      s = std::move(sr.next);
    }
    returns.push_back(ret);
  }
  MeanStderr ms = mean_stderr(returns);
  EvalResult r;
  r.mean = ms.mean;
  r.stderr_of_mean = ms.stderr_of_mean;
  r.risky_rate = steps > 0 ? risky / static_cast<double>(steps) : 0.0;
  r.episodes = episodes;
  return r;
}

EvalResult evaluate_checkpoint(const std::string& path, int episodes,
                               uint64_t seed) {
  Checkpoint c = Checkpoint::load(path);
  auto env = make_environment(c.env_name, c.n_agents);
  return evaluate_policy(c.policy, *env, episodes, seed);
}

TrainResult train(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.validate();
  fs::path run_dir = resolve_out_dir(cfg.out_dir);
  fs::create_directories(run_dir);
  {
    std::ofstream rc(run_dir / "config.resolved.ini");
    rc << cfg.resolved_text();
  }

  auto env = make_environment(cfg.env_name, cfg.n_agents);
  std::optional<SymmetrySpec> spec;
  std::vector<int> aug_ids;
  if (cfg.esp_enabled()) {
    spec.emplace(default_symmetry_spec(*env, cfg.esp.group));
    if (cfg.esp.augment_enabled)
      aug_ids = resolve_elements(*spec, cfg.esp.augmentation_elements, false);
  }

  Policy policy(env->obs_dim(), cfg.trainer.hidden, env->action_layout(),
                cfg.seed);
  Critic critic(env->global_dim(), cfg.trainer.hidden, cfg.seed);
  AdamState opt_pi(policy.params.size());
  AdamState opt_vf(critic.params.size());
  EnvPool pool(*env, cfg.trainer.n_envs, cfg.seed);
  Rng shuffle_rng = Rng::stream(cfg.seed, 0x5F0F);
  Rng esp_rng = Rng::stream(cfg.seed, 0xE5B0);

  MetricsWriter metrics((run_dir / "metrics.csv").string());
  std::ofstream evalcsv(run_dir / "eval.csv");
  evalcsv << "step,eval_return_mean,eval_return_stderr,risky_rate,episodes\n";

  auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  };
  auto write_eval = [&](int64_t at) {
    EvalResult ev =
        evaluate_policy(policy, *env, cfg.eval_episodes, cfg.seed);
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%.17g,%d",
                  static_cast<long long>(at), ev.mean, ev.stderr_of_mean,
                  ev.risky_rate, ev.episodes);
    evalcsv << buf << "\n";
    evalcsv.flush();
    return ev;
  };

  TrainResult result;
  result.run_dir = run_dir;
  int64_t steps = 0;
  int64_t next_eval = cfg.eval_every > 0 ? cfg.eval_every : cfg.total_steps;

  while (steps < cfg.total_steps) {
    auto col = pool.collect(policy, critic, cfg.trainer.horizon);
    std::vector<Trajectory> trajs = std::move(col.trajectories);
    size_t n_real = trajs.size();
    if (!aug_ids.empty()) {
      for (size_t i = 0; i < n_real; ++i) {
        auto copies = augment_trajectory(trajs[i], *spec, aug_ids, policy);
        for (Trajectory& t : copies) {
          fill_value_predictions(t, critic);
          trajs.push_back(std::move(t));
        }
      }
    }
    for (Trajectory& t : trajs)
      compute_gae(t, cfg.trainer.gamma, cfg.trainer.gae_lambda);
    RolloutBatch batch = flatten_batch(trajs, *env);

    MetricsRecord rec;
    try {
      rec = cfg.esp_enabled()
                ? esp_update(policy, critic, opt_pi, opt_vf, batch, cfg.trainer,
                             cfg.esp, spec ? &*spec : nullptr, shuffle_rng,
                             esp_rng)
                : ppo_update(policy, critic, opt_pi, opt_vf, batch, cfg.trainer,
                             shuffle_rng);
    } catch (const NumericalError& err) {
      make_checkpoint(cfg, steps, policy, critic, opt_pi, opt_vf, shuffle_rng,
                      esp_rng)
          .save((run_dir / "ckpt_error.bin").string());
      std::ofstream report(run_dir / "error.txt");
      report << "numerical failure at step " << steps << ": " << err.what()
             << "\n";
      log << "[train] aborted: " << err.what() << "\n";
      throw;
    }

    steps += col.env_steps;
    result.real_transitions += col.env_steps;
    result.stored_transitions += batch.n_rows();
    rec.step = steps;
    MeanStderr ep = mean_stderr(col.completed_episode_returns);
    rec.ep_reward_mean = ep.mean;
    rec.ep_reward_stderr = ep.stderr_of_mean;
    rec.wall_time_s = elapsed();
    metrics.append(rec);

    if (cfg.eval_episodes > 0 && steps >= next_eval &&
        steps < cfg.total_steps) {
      write_eval(steps);
      make_checkpoint(cfg, steps, policy, critic, opt_pi, opt_vf, shuffle_rng,
                      esp_rng)
          .save((run_dir / ("ckpt_step" + std::to_string(steps) + ".bin"))
                    .string());
      while (next_eval <= steps) next_eval += cfg.eval_every;
    }
  }

  if (cfg.eval_episodes > 0) result.final_eval = write_eval(steps);
  make_checkpoint(cfg, steps, policy, critic, opt_pi, opt_vf, shuffle_rng,
                  esp_rng)
      .save((run_dir / "ckpt_final.bin").string());
  result.steps = steps;

  nlohmann::json summary;
  summary["steps"] = result.steps;
  summary["final_eval_mean"] = result.final_eval.mean;
  summary["final_eval_stderr"] = result.final_eval.stderr_of_mean;
  summary["final_eval_risky_rate"] = result.final_eval.risky_rate;
  summary["real_transitions"] = result.real_transitions;
  summary["stored_transitions"] = result.stored_transitions;
  summary["wall_time_s"] = elapsed();
  std::ofstream(run_dir / "summary.json") << summary.dump(2) << "\n";

  log << "[train] " << cfg.env_name << " " << cfg.algorithm << " seed "
      << cfg.seed << ": " << steps << " steps, final eval "
      << result.final_eval.mean << " +- " << result.final_eval.stderr_of_mean
      << " (" << run_dir.string() << ")\n";
  return result;
}

namespace {

struct ArmSpec {
  std::string name;
  std::function<void(ExperimentConfig&)> apply;
  double buffer_multiplier = 1.0;
};

std::vector<ArmSpec> family_arms(const std::string& family) {
  auto esp_on = [](ExperimentConfig& c) { c.algorithm = "mappo_esp"; };
  if (family == "count") {
    auto arm = [=](std::vector<std::string> elems) {
      return [=](ExperimentConfig& c) {
        esp_on(c);
        c.esp.augment_enabled = true;
        c.esp.loss_enabled = false;
        c.esp.group = "c4";
        c.esp.augmentation_elements = elems;
      };
    };
    return {{"aug1_r90", arm({"r90"}), 2.0},
            {"aug2_r90_r180", arm({"r90", "r180"}), 3.0},
            {"aug3_r90_r180_r270", arm({"r90", "r180", "r270"}), 4.0}};
  }
  if (family == "type") {
    auto arm = [=](std::string group, std::vector<std::string> elems) {
      return [=](ExperimentConfig& c) {
        esp_on(c);
        c.esp.augment_enabled = true;
        c.esp.loss_enabled = false;
        c.esp.group = group;
        c.esp.augmentation_elements = elems;
      };
    };
    return {{"rotation_only", arm("c4", {"r90", "r180"}), 3.0},
            {"rotation_flip", arm("d4", {"r90", "flipx"}), 3.0}};
  }
  if (family == "coef") {
    std::vector<ArmSpec> arms;
    for (double c : {0.0, 0.1, 0.25, 0.5, 1.0}) {
      char name[32];
      std::snprintf(name, sizeof(name), "c%.2f", c);
      arms.push_back({name,
                      [=](ExperimentConfig& cfg) {
                        esp_on(cfg);
                        cfg.esp.augment_enabled = false;
                        cfg.esp.loss_enabled = true;
                        cfg.esp.c = c;
                        cfg.esp.group = "c4";
                        cfg.esp.consistency_elements = {"r90"};
                      },
                      1.0});
    }
    return arms;
  }
  if (family == "modules") {
    auto arm = [=](bool aug, bool loss) {
      return [=](ExperimentConfig& c) {
        esp_on(c);
        c.esp.augment_enabled = aug;
        c.esp.loss_enabled = loss;
        c.esp.c = 0.5;
        c.esp.group = "c4";
        c.esp.augmentation_elements = {"r90"};
        c.esp.consistency_elements = {"r90"};
      };
    };
    return {{"baseline", arm(false, false), 1.0},
            {"aug_only", arm(true, false), 2.0},
            {"loss_only", arm(false, true), 1.0},
            {"esp_both", arm(true, true), 2.0}};
  }
  throw std::invalid_argument("ablate: unknown family '" + family +
                              "' (count|type|coef|modules)");
}

}  // namespace

int ablate(const ExperimentConfig& base, const std::string& family,
           std::ostream& log) {
  std::vector<ArmSpec> arms = family_arms(family);
  fs::path root = resolve_out_dir(base.out_dir) / ("ablate_" + family);
  fs::create_directories(root);
  std::ofstream summary(root / "summary.csv");
  summary << "family,arm,seed,steps,eval_mean,eval_stderr,risky_rate,"
             "real_transitions,stored_transitions,buffer_multiplier\n";
  std::ofstream arms_csv(root / "arms.csv");
  arms_csv << "family,arm,n_seeds,mean_eval,stderr_eval\n";

  for (const ArmSpec& arm : arms) {
    std::vector<double> finals;
    for (int k = 0; k < base.n_seeds; ++k) {
      ExperimentConfig cfg = base;
      arm.apply(cfg);
      cfg.seed = base.seed + static_cast<uint64_t>(k);
      cfg.out_dir = (fs::path(base.out_dir) / ("ablate_" + family) / arm.name /
                     ("seed" + std::to_string(cfg.seed)))
                        .string();
      TrainResult r = train(cfg, log);
      finals.push_back(r.final_eval.mean);
      char buf[512];
      std::snprintf(buf, sizeof(buf),
                    "%s,%s,%llu,%lld,%.17g,%.17g,%.17g,%lld,%lld,%.3g",
                    family.c_str(), arm.name.c_str(),
                    static_cast<unsigned long long>(cfg.seed),
                    static_cast<long long>(r.steps), r.final_eval.mean,
                    r.final_eval.stderr_of_mean, r.final_eval.risky_rate,
                    static_cast<long long>(r.real_transitions),
                    static_cast<long long>(r.stored_transitions),
                    arm.buffer_multiplier);
      summary << buf << "\n";
      summary.flush();
    }
    MeanStderr ms = mean_stderr(finals);
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%s,%d,%.17g,%.17g", family.c_str(),
                  arm.name.c_str(), base.n_seeds, ms.mean, ms.stderr_of_mean);
    arms_csv << buf << "\n";
    arms_csv.flush();
    log << "[ablate] " << family << "/" << arm.name << ": mean " << ms.mean
        << " +- " << ms.stderr_of_mean << "\n";
  }
  return 0;
}

}  // namespace esp
