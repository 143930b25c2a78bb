#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "esp/tabular.hpp"

using namespace esp;

namespace {

// Grid helpers mirroring the builder's indexing (independent of it).
int cell(int x, int y, int side) {
  int half = (side - 1) / 2;
  return (x + half) + side * (y + half);
}
constexpr int kStay = 0, kN = 1, kS = 2, kE = 3, kW = 4;

}  // namespace

TEST_CASE("builder validation and enumeration counts") {
  CHECK_THROWS_AS(build_grid_symmetry_game(4, 1), std::invalid_argument);
  CHECK_THROWS_AS(build_grid_symmetry_game(3, 3), std::invalid_argument);
  CHECK_THROWS_AS(build_grid_symmetry_game(3, 1, 1.5), std::invalid_argument);

  FiniteGame g = build_grid_symmetry_game(3, 2);
  CHECK(g.n_states == 81);
  CHECK(g.n_joint_actions == 25);
  FiniteGame g5 = build_grid_symmetry_game(5, 1);
  CHECK(g5.n_states == 25);
  CHECK(g5.n_joint_actions == 5);
}

TEST_CASE("reward formula at the fixed point") {
  FiniteGame g = build_grid_symmetry_game(3, 2);
  int c = cell(0, 0, 3);
  int s = c + 9 * c;  // both agents at center
  int a = kStay + 5 * kStay;
  CHECK(g.r(s, a) == -1.0);  // collision penalty only
  CHECK(g.next(s, a) == s);
}

TEST_CASE("exact table invariances hold by construction") {
  for (auto [side, n] : {std::pair{3, 1}, {3, 2}, {5, 1}, {5, 2}}) {
    FiniteGame g = build_grid_symmetry_game(side, n);
    TableSymmetryReport rep = check_finite_game_symmetry(g);
    CHECK(rep.pass());
  }
}

TEST_CASE("rotating any (s,a) by 90 degrees leaves reward unchanged") {
  FiniteGame g = build_grid_symmetry_game(3, 2);
  for (int s = 0; s < g.n_states; ++s)
    for (int a = 0; a < g.n_joint_actions; ++a)
      CHECK(g.r(s, a) == g.r(g.sig(1, s), g.ta(1, a)));
}

TEST_CASE("value iteration: myopic case gamma = 0") {
  FiniteGame g = build_grid_symmetry_game(3, 1, 0.0);
  std::vector<double> q = value_iteration(g, 1e-12);
  for (size_t i = 0; i < q.size(); ++i) CHECK(q[i] == g.reward[i]);
}

TEST_CASE("value iteration: hand-computed single-agent values") {
  FiniteGame g = build_grid_symmetry_game(3, 1, 0.9);
  std::vector<double> q = value_iteration(g, 1e-12);
  auto Q = [&](int s, int a) { return q[s * g.n_joint_actions + a]; };

  int center = cell(0, 0, 3);
  int north = cell(0, 1, 3);
  int corner = cell(1, 1, 3);

  // center is an absorbing optimum
  CHECK(Q(center, kStay) == doctest::Approx(0.0).epsilon(1e-10));
  // one step off-center: R = -1, then optimal return 0
  CHECK(Q(north, kS) == doctest::Approx(-1.0).epsilon(1e-9));
  // staying off-center wastes a step: -1 + 0.9 * (-1)
  CHECK(Q(north, kStay) == doctest::Approx(-1.9).epsilon(1e-9));
  // corner: -2 + 0.9 * (-1) via either axis-first path
  CHECK(Q(corner, kW) == doctest::Approx(-2.9).epsilon(1e-9));

  // 5x5: the far corner's optimal value is the manhattan geometric sum
  FiniteGame g5 = build_grid_symmetry_game(5, 1, 0.9);
  std::vector<double> q5 = value_iteration(g5, 1e-12);
  int far = cell(2, 2, 5);
  double v_far = q5[far * 5 + kStay];
  for (int a = 1; a < 5; ++a)
    v_far = std::max(v_far, q5[far * 5 + a]);
  // -4 + 0.9*(-3 + 0.9*(-2 + 0.9*(-1))) = -9.049
  CHECK(v_far == doctest::Approx(-9.049).epsilon(1e-9));
}

TEST_CASE("value iteration: two-agent geometric series at the center") {
  FiniteGame g = build_grid_symmetry_game(3, 2, 0.9);
  std::vector<double> q = value_iteration(g, 1e-12);
  int c = cell(0, 0, 3);
  int s = c + 9 * c;
  // best achievable flow reward is -1 forever: Q = -1/(1-0.9)
  CHECK(q[s * 25 + 0] == doctest::Approx(-10.0).epsilon(1e-8));
}

TEST_CASE("value iteration residuals are monotone and below tolerance") {
  FiniteGame g = build_grid_symmetry_game(3, 2);
  std::vector<double> trace;
  std::vector<double> q = value_iteration(g, 1e-10, 1000000, &trace);
  REQUIRE(trace.size() > 2);
  CHECK(trace.back() <= 1e-10);
  for (size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] + 1e-15);
}

TEST_CASE("value iteration diagnostics on non-convergence") {
  FiniteGame g = build_grid_symmetry_game(3, 2);
  CHECK_THROWS_WITH_AS(value_iteration(g, 1e-12, 2),
                       doctest::Contains("no convergence"), std::runtime_error);
  CHECK_THROWS_AS(value_iteration(g, -1.0), std::invalid_argument);
}

TEST_CASE("optimal value equivalence holds on symmetric games") {
  for (auto [side, n] : {std::pair{3, 2}, {5, 1}}) {
    FiniteGame g = build_grid_symmetry_game(side, n);
    std::vector<double> q = value_iteration(g, 1e-10);
    EquivalenceReport rep = verify_optimal_value_equivalence(g, q, 1e-8);
    CHECK(rep.pass);
    CHECK(rep.max_deviation <= 1e-8);
  }
}

TEST_CASE("identity element never deviates") {
  FiniteGame g = build_grid_symmetry_game(3, 1);
  std::vector<double> q = value_iteration(g, 1e-10);
  for (int s = 0; s < g.n_states; ++s)
    for (int a = 0; a < g.n_joint_actions; ++a)
      CHECK(q[s * g.n_joint_actions + a] ==
            q[g.sig(0, s) * g.n_joint_actions + g.ta(0, a)]);
}

TEST_CASE("symmetry-broken control game fails with a witness") {
  FiniteGame broken = build_symmetry_broken_grid_game(3, 2);
  CHECK_FALSE(check_finite_game_symmetry(broken).pass());
  std::vector<double> q = value_iteration(broken, 1e-10);
  EquivalenceReport rep = verify_optimal_value_equivalence(broken, q, 1e-8);
  CHECK_FALSE(rep.pass);
  CHECK(rep.max_deviation > 1e-3);
  CHECK(rep.witness_state >= 0);
  CHECK(rep.witness_element > 0);
  CHECK(rep.to_text().find("FAIL") != std::string::npos);
}
