#include "esp/environments.hpp"

#include <cmath>
#include <stdexcept>

namespace esp {

namespace {

const std::vector<Vec2> kMoveDisplacements = {
    {0, 0},   // no-op
    {1, 0},   // right
    {-1, 0},  // left
    {0, 1},   // up
    {0, -1},  // down
};

double clamp(double v, double lo, double hi) {
  return std::min(hi, std::max(lo, v));
}

/// Integrates one particle: damped velocity, speed cap, arena clamp.
void integrate(Vec2& pos, Vec2& vel, const Vec2& accel,
               const PhysicsParams& ph, double max_speed) {
  vel.x = vel.x * (1.0 - ph.damping) + accel.x * ph.dt;
  vel.y = vel.y * (1.0 - ph.damping) + accel.y * ph.dt;
  double speed = vel.norm();
  if (speed > max_speed) {
    vel.x *= max_speed / speed;
    vel.y *= max_speed / speed;
  }
  pos.x = clamp(pos.x + vel.x * ph.dt, -ph.arena_half_width,
                ph.arena_half_width);
  pos.y = clamp(pos.y + vel.y * ph.dt, -ph.arena_half_width,
                ph.arena_half_width);
}

Vec2 read2(std::span<const double> v, int slot) {
  return {v[2 * slot], v[2 * slot + 1]};
}
void write2(std::span<double> v, int slot, const Vec2& p) {
  v[2 * slot] = p.x;
  v[2 * slot + 1] = p.y;
}

class ParticleEnvBase : public Environment {
 public:
  int n_agents() const override { return n_agents_; }
  int episode_len() const override { return episode_len_; }
  const ObservationLayout& obs_layout() const override { return obs_layout_; }
  const ObservationLayout& global_layout() const override {
    return global_layout_;
  }
  const ActionLayout& action_layout() const override { return act_layout_; }

  EnvState reset(uint64_t seed) const override {
    EnvState s;
    s.global = sample_initial_global(seed);
    s.obs = observe(s.global);
    s.t = 0;
    return s;
  }

  StepResult step(const EnvState& state,
                  const JointAction& action) const override {
    if (state.t >= episode_len_)
      throw std::invalid_argument(name() + ": step on a finished episode");
    if (static_cast<int>(action.actions.size()) != n_agents_)
      throw std::invalid_argument(name() + ": joint action arity mismatch");
    if (static_cast<int>(state.global.size()) != global_layout_.total_len())
      throw std::invalid_argument(name() + ": state length mismatch");
    validate_actions(action);

    StepResult r;
    r.next.global = dynamics(state.global, action);
    r.next.obs = observe(r.next.global);
    r.next.t = state.t + 1;
    r.reward = reward(state.global, action, r.next.global);
    r.terminal = false;
    r.episode_end = r.next.t >= episode_len_;
    return r;
  }

 protected:
  void validate_actions(const JointAction& action) const {
    for (const Action& a : action.actions) {
      if (act_layout_.discrete) {
        int idx = std::get<int>(a);
        if (idx < 0 || idx >= act_layout_.n_actions)
          throw std::invalid_argument(name() + ": discrete action out of range");
      } else {
        (void)std::get<Vec2>(a);
      }
    }
  }

  Vec2 control_accel(const Action& a) const {
    if (act_layout_.discrete) {
      Vec2 d = kMoveDisplacements[std::get<int>(a)];
      return d * physics_.accel_scale;
    }
    Vec2 u = std::get<Vec2>(a);
    // Continuous commands are box-clamped; the box is C4/D4 symmetric.
    u.x = clamp(u.x, -1.0, 1.0);
    u.y = clamp(u.y, -1.0, 1.0);
    return u * physics_.accel_scale;
  }

  virtual std::vector<double> sample_initial_global(uint64_t seed) const = 0;
  virtual std::vector<double> dynamics(std::span<const double> global,
                                       const JointAction& action) const = 0;
  virtual double reward(std::span<const double> global,
                        const JointAction& action,
                        std::span<const double> next_global) const = 0;

  int n_agents_ = 0;
  int episode_len_ = 25;
  PhysicsParams physics_;
  ObservationLayout obs_layout_;
  ObservationLayout global_layout_;
  ActionLayout act_layout_;
};

// ---------------------------------------------------------------------------
// Cooperative navigation
// ---------------------------------------------------------------------------

struct CoopNavOptions {
  double asym_reward_coef = 0.0;  // fixture: absolute-position reward term
  Vec2 wind{0.0, 0.0};            // fixture: constant force
};

class CoopNavEnv : public ParticleEnvBase {
 public:
  using Options = CoopNavOptions;

  explicit CoopNavEnv(int n_agents, Options opt = Options()) : opt_(opt) {
    if (n_agents < 2)
      throw std::invalid_argument("coop_nav: n_agents must be >= 2");
    n_agents_ = n_agents;
    episode_len_ = 25;
    // global: agent pos x n | agent vel x n | landmark pos x n
    global_layout_ = ObservationLayout::geometric2d(3 * n_agents);
    // obs: own vel, own pos, landmarks relative, other agents relative
    obs_layout_ = ObservationLayout::geometric2d(2 + n_agents + (n_agents - 1));
    act_layout_ = ActionLayout::discrete_moves(kMoveDisplacements);
  }

  std::string name() const override {
    return opt_.asym_reward_coef != 0.0 ? "coop_nav_asym_fixture"
           : (opt_.wind.x != 0.0 || opt_.wind.y != 0.0) ? "coop_nav_wind_fixture"
                                                        : "coop_nav";
  }

  double reward_bound() const override {
    double w = physics_.arena_half_width;
    double max_dist = 2.0 * std::sqrt(2.0) * w;
    double pairs = n_agents_ * (n_agents_ - 1) / 2.0;
    return n_agents_ * max_dist + pairs + std::fabs(opt_.asym_reward_coef) * w;
  }

  std::vector<std::vector<double>> observe(
      std::span<const double> g) const override {
    std::vector<std::vector<double>> obs(n_agents_);
    for (int i = 0; i < n_agents_; ++i) {
      Vec2 pos = read2(g, i);
      Vec2 vel = read2(g, n_agents_ + i);
      std::vector<double>& o = obs[i];
      o.reserve(obs_layout_.total_len());
      o.push_back(vel.x);
      o.push_back(vel.y);
      o.push_back(pos.x);
      o.push_back(pos.y);
      for (int j = 0; j < n_agents_; ++j) {
        Vec2 lm = read2(g, 2 * n_agents_ + j);
        o.push_back(lm.x - pos.x);
        o.push_back(lm.y - pos.y);
      }
      for (int j = 0; j < n_agents_; ++j) {
        if (j == i) continue;
        Vec2 other = read2(g, j);
        o.push_back(other.x - pos.x);
        o.push_back(other.y - pos.y);
      }
    }
    return obs;
  }

 protected:
  std::vector<double> sample_initial_global(uint64_t seed) const override {
    Rng rng(seed);
    std::vector<double> g(global_layout_.total_len(), 0.0);
    double w = physics_.arena_half_width;
    for (int i = 0; i < n_agents_; ++i)
      write2(g, i, {rng.uniform(-w, w), rng.uniform(-w, w)});
    // velocities start at zero
    for (int j = 0; j < n_agents_; ++j)
      write2(g, 2 * n_agents_ + j, {rng.uniform(-w, w), rng.uniform(-w, w)});
    return g;
  }

  std::vector<double> dynamics(std::span<const double> g,
                               const JointAction& action) const override {
    std::vector<double> out(g.begin(), g.end());
    for (int i = 0; i < n_agents_; ++i) {
      Vec2 pos = read2(g, i);
      Vec2 vel = read2(g, n_agents_ + i);
      Vec2 acc = control_accel(action.actions[i]) + opt_.wind;
      integrate(pos, vel, acc, physics_, physics_.max_speed);
      write2(out, i, pos);
      write2(out, n_agents_ + i, vel);
    }
    return out;
  }

  double reward(std::span<const double> /*g*/, const JointAction& /*action*/,
                std::span<const double> ng) const override {
    double r = 0.0;
    for (int j = 0; j < n_agents_; ++j) {
      Vec2 lm = read2(ng, 2 * n_agents_ + j);
      double best = distance(lm, read2(ng, 0));
      for (int i = 1; i < n_agents_; ++i)
        best = std::min(best, distance(lm, read2(ng, i)));
      r -= best;
    }
    for (int i = 0; i < n_agents_; ++i)
      for (int j = i + 1; j < n_agents_; ++j)
        if (distance(read2(ng, i), read2(ng, j)) < 2.0 * kAgentRadius)
          r -= kCollisionPenalty;
    r += opt_.asym_reward_coef * ng[0];  // fixture only: agent-0 x position
    return r;
  }

 private:
  static constexpr double kAgentRadius = 0.15;
  static constexpr double kCollisionPenalty = 1.0;
  Options opt_;
};

// ---------------------------------------------------------------------------
// Predator-prey
// ---------------------------------------------------------------------------

class PredatorPreyEnv : public ParticleEnvBase {
 public:
  explicit PredatorPreyEnv(int n_predators) {
    if (n_predators < 2)
      throw std::invalid_argument("predator_prey: n_predators must be >= 2");
    n_agents_ = n_predators;
    episode_len_ = 25;
    // global: predator pos x n | predator vel x n | prey pos | prey vel
    global_layout_ = ObservationLayout::geometric2d(2 * n_predators + 2);
    // obs: own vel, own pos, prey relative, prey vel, other predators relative
    obs_layout_ =
        ObservationLayout::geometric2d(4 + (n_predators - 1));
    act_layout_ = ActionLayout::discrete_moves(kMoveDisplacements);
  }

  std::string name() const override { return "predator_prey"; }

  double reward_bound() const override {
    double w = physics_.arena_half_width;
    return kCaptureBonus + kShapingCoef * 2.0 * std::sqrt(2.0) * w;
  }

  std::vector<std::vector<double>> observe(
      std::span<const double> g) const override {
    int n = n_agents_;
    Vec2 prey_pos = read2(g, 2 * n);
    Vec2 prey_vel = read2(g, 2 * n + 1);
    std::vector<std::vector<double>> obs(n);
    for (int i = 0; i < n; ++i) {
      Vec2 pos = read2(g, i);
      Vec2 vel = read2(g, n + i);
      std::vector<double>& o = obs[i];
      o.reserve(obs_layout_.total_len());
      o.push_back(vel.x);
      o.push_back(vel.y);
      o.push_back(pos.x);
      o.push_back(pos.y);
      o.push_back(prey_pos.x - pos.x);
      o.push_back(prey_pos.y - pos.y);
      o.push_back(prey_vel.x);
      o.push_back(prey_vel.y);
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        Vec2 other = read2(g, j);
        o.push_back(other.x - pos.x);
        o.push_back(other.y - pos.y);
      }
    }
    return obs;
  }

 protected:
  std::vector<double> sample_initial_global(uint64_t seed) const override {
    Rng rng(seed);
    std::vector<double> g(global_layout_.total_len(), 0.0);
    double w = physics_.arena_half_width;
    for (int i = 0; i < n_agents_; ++i)
      write2(g, i, {rng.uniform(-w, w), rng.uniform(-w, w)});
    write2(g, 2 * n_agents_, {rng.uniform(-w, w), rng.uniform(-w, w)});
    return g;
  }

  std::vector<double> dynamics(std::span<const double> g,
                               const JointAction& action) const override {
    int n = n_agents_;
    std::vector<double> out(g.begin(), g.end());
    for (int i = 0; i < n; ++i) {
      Vec2 pos = read2(g, i);
      Vec2 vel = read2(g, n + i);
      integrate(pos, vel, control_accel(action.actions[i]), physics_,
                physics_.max_speed);
      write2(out, i, pos);
      write2(out, n + i, vel);
    }
    // Scripted prey: accelerate directly away from the nearest predator.
    // Built from distances and a difference vector, so it is equivariant by
    // construction (verified by the checkers).
    Vec2 prey_pos = read2(g, 2 * n);
    Vec2 prey_vel = read2(g, 2 * n + 1);
    int nearest = 0;
    double best = distance(prey_pos, read2(g, 0));
    for (int i = 1; i < n; ++i) {
      double d = distance(prey_pos, read2(g, i));
      if (d < best) {
        best = d;
        nearest = i;
      }
    }
    Vec2 away = prey_pos - read2(g, nearest);
    double norm = away.norm();
    Vec2 accel =
        norm > 1e-9 ? away * (kPreyAccel / norm) : Vec2{0.0, 0.0};
    integrate(prey_pos, prey_vel, accel, physics_, kPreyMaxSpeed);
    write2(out, 2 * n, prey_pos);
    write2(out, 2 * n + 1, prey_vel);
    return out;
  }

  double reward(std::span<const double> /*g*/, const JointAction& /*action*/,
                std::span<const double> ng) const override {
    int n = n_agents_;
    Vec2 prey = read2(ng, 2 * n);
    double min_dist = distance(prey, read2(ng, 0));
    for (int i = 1; i < n; ++i)
      min_dist = std::min(min_dist, distance(prey, read2(ng, i)));
    double r = -kShapingCoef * min_dist;
    if (min_dist < kPredatorRadius + kPreyRadius) r += kCaptureBonus;
    return r;
  }

 private:
  static constexpr double kCaptureBonus = 10.0;
  static constexpr double kShapingCoef = 0.1;
  static constexpr double kPredatorRadius = 0.075;
  static constexpr double kPreyRadius = 0.05;
  static constexpr double kPreyAccel = 4.0;
  static constexpr double kPreyMaxSpeed = 1.3;
};

// ---------------------------------------------------------------------------
// Formation change (simplified 2D kinematic stand-in for the robot task)
// ---------------------------------------------------------------------------

class FormationChangeEnv : public ParticleEnvBase {
 public:
  explicit FormationChangeEnv(int n_robots) {
    if (n_robots != 4 && n_robots != 8)
      throw std::invalid_argument("formation_change: n_robots must be 4 or 8");
    n_agents_ = n_robots;
    episode_len_ = 50;
    physics_.accel_scale = 2.0;  // continuous commands are already in [-1,1]^2
    // global: robot pos x n | robot vel x n | goal pos x n
    global_layout_ = ObservationLayout::geometric2d(3 * n_robots);
    // obs: own vel, own pos, goal relative, obstacle relative, others relative
    obs_layout_ = ObservationLayout::geometric2d(4 + (n_robots - 1));
    act_layout_ = ActionLayout::continuous2d();
  }

  std::string name() const override { return "formation_change"; }

  double reward_bound() const override {
    double w = physics_.arena_half_width;
    double pairs = n_agents_ * (n_agents_ - 1) / 2.0;
    return n_agents_ * 2.0 * std::sqrt(2.0) * w + pairs + n_agents_ +
           kArrivalBonus;
  }

  std::vector<std::vector<double>> observe(
      std::span<const double> g) const override {
    int n = n_agents_;
    std::vector<std::vector<double>> obs(n);
    for (int i = 0; i < n; ++i) {
      Vec2 pos = read2(g, i);
      Vec2 vel = read2(g, n + i);
      Vec2 goal = read2(g, 2 * n + i);
      std::vector<double>& o = obs[i];
      o.reserve(obs_layout_.total_len());
      o.push_back(vel.x);
      o.push_back(vel.y);
      o.push_back(pos.x);
      o.push_back(pos.y);
      o.push_back(goal.x - pos.x);
      o.push_back(goal.y - pos.y);
      // obstacle sits at the origin
      o.push_back(-pos.x);
      o.push_back(-pos.y);
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        Vec2 other = read2(g, j);
        o.push_back(other.x - pos.x);
        o.push_back(other.y - pos.y);
      }
    }
    return obs;
  }

 protected:
  std::vector<double> sample_initial_global(uint64_t seed) const override {
    Rng rng(seed);
    int n = n_agents_;
    std::vector<double> g(global_layout_.total_len(), 0.0);
    // Slots on the perimeter of a square: corners, then edge midpoints.
    double h = kSquareHalfWidth;
    std::vector<Vec2> slots = {{h, h}, {-h, h}, {-h, -h}, {h, -h}};
    if (n == 8) {
      slots.push_back({0, h});
      slots.push_back({-h, 0});
      slots.push_back({0, -h});
      slots.push_back({h, 0});
    }
    for (int i = 0; i < n; ++i) {
      Vec2 jitter{rng.uniform(-kSpawnJitter, kSpawnJitter),
                  rng.uniform(-kSpawnJitter, kSpawnJitter)};
      write2(g, i, slots[i] + jitter);
      write2(g, 2 * n + i, -slots[i]);  // antipodal goal
    }
    return g;
  }

  std::vector<double> dynamics(std::span<const double> g,
                               const JointAction& action) const override {
    int n = n_agents_;
    std::vector<double> out(g.begin(), g.end());
    for (int i = 0; i < n; ++i) {
      Vec2 pos = read2(g, i);
      Vec2 vel = read2(g, n + i);
      integrate(pos, vel, control_accel(action.actions[i]), physics_,
                physics_.max_speed);
      write2(out, i, pos);
      write2(out, n + i, vel);
    }
    return out;
  }

  double reward(std::span<const double> /*g*/, const JointAction& /*action*/,
                std::span<const double> ng) const override {
    int n = n_agents_;
    double r = 0.0;
    bool all_arrived = true;
    for (int i = 0; i < n; ++i) {
      double d = distance(read2(ng, i), read2(ng, 2 * n + i));
      r -= d;
      if (d >= kGoalRadius) all_arrived = false;
    }
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j)
        if (distance(read2(ng, i), read2(ng, j)) < 2.0 * kRobotRadius)
          r -= kCollisionPenalty;
      if (read2(ng, i).norm() < kRobotRadius + kObstacleRadius)
        r -= kCollisionPenalty;
    }
    if (all_arrived) r += kArrivalBonus;
    return r;
  }

 private:
  static constexpr double kSquareHalfWidth = 0.8;
  static constexpr double kSpawnJitter = 0.05;
  static constexpr double kRobotRadius = 0.1;
  static constexpr double kObstacleRadius = 0.25;
  static constexpr double kGoalRadius = 0.1;
  static constexpr double kCollisionPenalty = 1.0;
  static constexpr double kArrivalBonus = 5.0;
};

}  // namespace

std::unique_ptr<Environment> make_cooperative_navigation(int n_agents) {
  return std::make_unique<CoopNavEnv>(n_agents);
}

std::unique_ptr<Environment> make_predator_prey(int n_predators) {
  return std::make_unique<PredatorPreyEnv>(n_predators);
}

std::unique_ptr<Environment> make_formation_change(int n_robots) {
  return std::make_unique<FormationChangeEnv>(n_robots);
}

std::unique_ptr<Environment> make_environment(const std::string& name,
                                              int n_agents) {
  if (name == "coop_nav")
    return make_cooperative_navigation(n_agents > 0 ? n_agents : 3);
  if (name == "predator_prey")
    return make_predator_prey(n_agents > 0 ? n_agents : 3);
  if (name == "formation_change")
    return make_formation_change(n_agents > 0 ? n_agents : 8);
  throw std::invalid_argument("unknown environment: " + name);
}

std::unique_ptr<Environment> make_reward_asymmetric_fixture() {
  CoopNavEnv::Options opt;
  opt.asym_reward_coef = 0.5;
  return std::make_unique<CoopNavEnv>(3, opt);
}

std::unique_ptr<Environment> make_wind_fixture() {
  CoopNavEnv::Options opt;
  opt.wind = {0.5, 0.0};
  return std::make_unique<CoopNavEnv>(3, opt);
}

SymmetrySpec default_symmetry_spec(const Environment& env,
                                   const std::string& group_name) {
  return SymmetrySpec(make_group(group_name), env);
}

double pairwise_proximity_fraction(const Environment& env,
                                   std::span<const double> global,
                                   double threshold) {
  int n = env.n_agents();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      Vec2 a{global[2 * i], global[2 * i + 1]};
      Vec2 b{global[2 * j], global[2 * j + 1]};
      if (distance(a, b) < threshold) return 1.0;
    }
  return 0.0;
}

}  // namespace esp
