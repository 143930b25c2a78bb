#include "esp/tabular.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

namespace esp {

namespace {

// Moves: stay, N, S, E, W (unit integer displacements).
constexpr int kMoves = 5;
constexpr int kDx[kMoves] = {0, 0, 0, 1, -1};
constexpr int kDy[kMoves] = {0, 1, -1, 0, 0};

struct GridGeometry {
  int side;
  int half;  // (side - 1) / 2
  int cells() const { return side * side; }

  int cell_of(int x, int y) const { return (x + half) + side * (y + half); }
  void coords(int cell, int& x, int& y) const {
    x = cell % side - half;
    y = cell / side - half;
  }
  int clamp(int c) const { return std::min(half, std::max(-half, c)); }

  /// C4 rotation by element g in {0,1,2,3}: (x, y) -> (-y, x) applied g times.
  int rotate_cell(int g, int cell) const {
    int x, y;
    coords(cell, x, y);
    for (int k = 0; k < g; ++k) {
      int nx = -y, ny = x;
      x = nx;
      y = ny;
    }
    return cell_of(x, y);
  }

  int rotate_move(int g, int m) const {
    int dx = kDx[m], dy = kDy[m];
    for (int k = 0; k < g; ++k) {
      int nx = -dy, ny = dx;
      dx = nx;
      dy = ny;
    }
    for (int b = 0; b < kMoves; ++b)
      if (kDx[b] == dx && kDy[b] == dy) return b;
    throw std::logic_error("rotate_move: no matching move");
  }
};

FiniteGame build_grid_game_impl(int grid_side, int n_agents, double gamma,
                                double corner_bonus) {
  if (grid_side != 3 && grid_side != 5)
    throw std::invalid_argument("build_grid_symmetry_game: grid_side in {3,5}");
  if (n_agents != 1 && n_agents != 2)
    throw std::invalid_argument("build_grid_symmetry_game: n_agents in {1,2}");
  if (gamma < 0.0 || gamma >= 1.0)
    throw std::invalid_argument("build_grid_symmetry_game: gamma in [0,1)");

  GridGeometry geo{grid_side, (grid_side - 1) / 2};
  int cells = geo.cells();
  FiniteGame g;
  g.name = "grid" + std::to_string(grid_side) + "x" + std::to_string(grid_side) +
           "_n" + std::to_string(n_agents) +
           (corner_bonus != 0.0 ? "_broken" : "");
  g.gamma = gamma;
  g.n_states = 1;
  g.n_joint_actions = 1;
  for (int i = 0; i < n_agents; ++i) {
    g.n_states *= cells;
    g.n_joint_actions *= kMoves;
  }

  auto agent_cell = [&](int state, int i) {
    for (int k = 0; k < i; ++k) state /= cells;
    return state % cells;
  };
  auto agent_move = [&](int action, int i) {
    for (int k = 0; k < i; ++k) action /= kMoves;
    return action % kMoves;
  };

  g.reward.resize(static_cast<size_t>(g.n_states) * g.n_joint_actions);
  g.transition.resize(g.reward.size());
  for (int s = 0; s < g.n_states; ++s) {
    double dist = 0.0;
    for (int i = 0; i < n_agents; ++i) {
      int x, y;
      geo.coords(agent_cell(s, i), x, y);
      dist += std::abs(x) + std::abs(y);
    }
    bool collide =
        n_agents == 2 && agent_cell(s, 0) == agent_cell(s, 1);
    double base = -dist - (collide ? 1.0 : 0.0);
    int x0, y0;
    geo.coords(agent_cell(s, 0), x0, y0);
    bool ne_corner = (x0 == geo.half && y0 == geo.half);
    for (int a = 0; a < g.n_joint_actions; ++a) {
      g.reward[static_cast<size_t>(s) * g.n_joint_actions + a] =
          base + (ne_corner ? corner_bonus : 0.0);
      int ns = 0, stride = 1;
      for (int i = 0; i < n_agents; ++i) {
        int x, y;
        geo.coords(agent_cell(s, i), x, y);
        int m = agent_move(a, i);
        x = geo.clamp(x + kDx[m]);
        y = geo.clamp(y + kDy[m]);
        ns += geo.cell_of(x, y) * stride;
        stride *= cells;
      }
      g.transition[static_cast<size_t>(s) * g.n_joint_actions + a] = ns;
    }
  }

  // C4 action on states and joint actions.
  g.n_elements = 4;
  g.identity_element = 0;
  g.cayley.resize(16);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) g.cayley[i * 4 + j] = (i + j) % 4;
  g.sigma.resize(static_cast<size_t>(4) * g.n_states);
  g.tau.resize(static_cast<size_t>(4) * g.n_joint_actions);
  for (int e = 0; e < 4; ++e) {
    for (int s = 0; s < g.n_states; ++s) {
      int ns = 0, stride = 1;
      for (int i = 0; i < n_agents; ++i) {
        ns += geo.rotate_cell(e, agent_cell(s, i)) * stride;
        stride *= cells;
      }
      g.sigma[static_cast<size_t>(e) * g.n_states + s] = ns;
    }
    for (int a = 0; a < g.n_joint_actions; ++a) {
      int na = 0, stride = 1;
      for (int i = 0; i < n_agents; ++i) {
        na += geo.rotate_move(e, agent_move(a, i)) * stride;
        stride *= kMoves;
      }
      g.tau[static_cast<size_t>(e) * g.n_joint_actions + a] = na;
    }
  }
  return g;
}

}  // namespace

FiniteGame build_grid_symmetry_game(int grid_side, int n_agents, double gamma) {
  return build_grid_game_impl(grid_side, n_agents, gamma, 0.0);
}

FiniteGame build_symmetry_broken_grid_game(int grid_side, int n_agents,
                                           double gamma) {
  return build_grid_game_impl(grid_side, n_agents, gamma, 2.0);
}

std::string TableSymmetryReport::to_text() const {
  std::ostringstream os;
  os << "bijective=" << (bijective ? "pass" : "FAIL")
     << " homomorphic=" << (homomorphic ? "pass" : "FAIL")
     << " reward_invariant=" << (reward_invariant ? "pass" : "FAIL")
     << " transition_equivariant="
     << (transition_equivariant ? "pass" : "FAIL");
  if (!counterexample.empty()) os << " [" << counterexample << "]";
  return os.str();
}

TableSymmetryReport check_finite_game_symmetry(const FiniteGame& game) {
  TableSymmetryReport rep;
  std::ostringstream why;

  rep.bijective = true;
  for (int e = 0; e < game.n_elements && rep.bijective; ++e) {
    std::vector<bool> seen_s(game.n_states, false);
    for (int s = 0; s < game.n_states; ++s) {
      int t = game.sig(e, s);
      if (t < 0 || t >= game.n_states || seen_s[t]) {
        rep.bijective = false;
        why << "sigma_" << e << " not bijective at s=" << s << "; ";
        break;
      }
      seen_s[t] = true;
    }
    std::vector<bool> seen_a(game.n_joint_actions, false);
    for (int a = 0; a < game.n_joint_actions && rep.bijective; ++a) {
      int t = game.ta(e, a);
      if (t < 0 || t >= game.n_joint_actions || seen_a[t]) {
        rep.bijective = false;
        why << "tau_" << e << " not bijective at a=" << a << "; ";
        break;
      }
      seen_a[t] = true;
    }
  }

  rep.homomorphic = true;
  for (int e1 = 0; e1 < game.n_elements && rep.homomorphic; ++e1)
    for (int e2 = 0; e2 < game.n_elements && rep.homomorphic; ++e2) {
      int e12 = game.cayley[e1 * game.n_elements + e2];
      for (int s = 0; s < game.n_states; ++s)
        if (game.sig(e12, s) != game.sig(e1, game.sig(e2, s))) {
          rep.homomorphic = false;
          why << "sigma homomorphism fails at (" << e1 << "," << e2 << ",s="
              << s << "); ";
          break;
        }
      for (int a = 0; a < game.n_joint_actions && rep.homomorphic; ++a)
        if (game.ta(e12, a) != game.ta(e1, game.ta(e2, a))) {
          rep.homomorphic = false;
          why << "tau homomorphism fails at (" << e1 << "," << e2 << ",a=" << a
              << "); ";
          break;
        }
    }

  rep.reward_invariant = true;
  rep.transition_equivariant = true;
  for (int e = 0; e < game.n_elements; ++e)
    for (int s = 0; s < game.n_states; ++s)
      for (int a = 0; a < game.n_joint_actions; ++a) {
        int sg = game.sig(e, s), ag = game.ta(e, a);
        if (rep.reward_invariant && game.r(s, a) != game.r(sg, ag)) {
          rep.reward_invariant = false;
          why << "R(s,a)!=R(sigma s,tau a) at (g=" << e << ",s=" << s
              << ",a=" << a << "); ";
        }
        if (rep.transition_equivariant &&
            game.sig(e, game.next(s, a)) != game.next(sg, ag)) {
          rep.transition_equivariant = false;
          why << "sigma(T(s,a))!=T(sigma s,tau a) at (g=" << e << ",s=" << s
              << ",a=" << a << "); ";
        }
        if (!rep.reward_invariant && !rep.transition_equivariant) {
          rep.counterexample = why.str();
          return rep;
        }
      }
  rep.counterexample = why.str();
  return rep;
}

std::vector<double> value_iteration(const FiniteGame& game, double tol,
                                    int max_iters,
                                    std::vector<double>* residual_trace) {
  if (tol <= 0.0) throw std::invalid_argument("value_iteration: tol > 0");
  if (game.gamma >= 1.0)
    throw std::invalid_argument("value_iteration: gamma < 1 required");

  size_t n = game.reward.size();
  std::vector<double> q(n, 0.0), q_next(n);
  std::vector<double> v(game.n_states, 0.0);
  double residual = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    for (int s = 0; s < game.n_states; ++s) {
      const double* qs = q.data() + static_cast<size_t>(s) * game.n_joint_actions;
      double best = qs[0];
      for (int a = 1; a < game.n_joint_actions; ++a)
        best = std::max(best, qs[a]);
      v[s] = best;
    }
    residual = 0.0;
    for (int s = 0; s < game.n_states; ++s)
      for (int a = 0; a < game.n_joint_actions; ++a) {
        size_t i = static_cast<size_t>(s) * game.n_joint_actions + a;
        q_next[i] = game.reward[i] + game.gamma * v[game.transition[i]];
        residual = std::max(residual, std::fabs(q_next[i] - q[i]));
      }
    q.swap(q_next);
    if (residual_trace) residual_trace->push_back(residual);
    if (residual <= tol) return q;
  }
  std::ostringstream os;
  os << "value_iteration: no convergence after " << max_iters
     << " iterations, residual=" << residual << " (tol=" << tol << ")";
  throw std::runtime_error(os.str());
}

std::string EquivalenceReport::to_text() const {
  std::ostringstream os;
  os << "optimal_value_equivalence: " << (pass ? "PASS" : "FAIL")
     << "  max_dev=" << max_deviation << " tol=" << tolerance;
  if (!pass)
    os << "\n  witness: s=" << witness_state << " a=" << witness_action
       << " g=" << witness_element;
  return os.str();
}

EquivalenceReport verify_optimal_value_equivalence(const FiniteGame& game,
                                                   const std::vector<double>& q,
                                                   double tol) {
  if (q.size() != game.reward.size())
    throw std::invalid_argument("verify_optimal_value_equivalence: Q shape");
  EquivalenceReport rep;
  rep.tolerance = tol;
  for (int e = 0; e < game.n_elements; ++e)
    for (int s = 0; s < game.n_states; ++s)
      for (int a = 0; a < game.n_joint_actions; ++a) {
        double dev = std::fabs(
            q[static_cast<size_t>(s) * game.n_joint_actions + a] -
            q[static_cast<size_t>(game.sig(e, s)) * game.n_joint_actions +
              game.ta(e, a)]);
        if (dev > rep.max_deviation) {
          rep.max_deviation = dev;
          rep.witness_state = s;
          rep.witness_action = a;
          rep.witness_element = e;
        }
      }
  rep.pass = rep.max_deviation <= tol;
  return rep;
}

}  // namespace esp
