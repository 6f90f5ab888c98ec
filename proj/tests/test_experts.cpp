#include <doctest.h>

#include <cmath>

#include "choreo/behaviours.hpp"
#include "choreo/experts.hpp"
#include "choreo/world.hpp"

using namespace choreo;
using namespace choreo::world;
using namespace choreo::experts;

TEST_CASE("expert actions are deterministic functions of the state") {
  const WorldState s = reset(11);
  const Action a1 = expert_approach(s);
  const Action a2 = expert_approach(s);
  CHECK(a1.dpos == a2.dpos);
  CHECK(a1.dyaw == a2.dyaw);
  CHECK(a1.daperture == a2.daperture);
}

TEST_CASE("expert actions respect the per-step clamp limits") {
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    const WorldState s = reset(rng());
    for (const Action& a : {expert_approach(s), expert_grasp(s), expert_retract(s)}) {
      CHECK(a.dpos.cwiseAbs().maxCoeff() <= Limits::dpos_max + 1e-12);
      CHECK(std::abs(a.dyaw) <= Limits::dyaw_max + 1e-12);
      CHECK(std::abs(a.daperture) <= Limits::daperture_max + 1e-12);
    }
  }
}

TEST_CASE("approach expert reaches the hover point within the phase budget") {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    WorldState s = reset(rng());
    int steps = 0;
    while (!approach_done(s) && steps < kPhaseStepBudget) {
      s = step(s, expert_approach(s));
      ++steps;
    }
    CHECK(approach_done(s));
    CHECK_FALSE(s.attached);
  }
}

TEST_CASE("approach expert never overshoots: hover distance is non-increasing") {
  WorldState s = reset(13);
  double prev = (hover_point(s) - s.gripper_pos).norm();
  for (int i = 0; i < kPhaseStepBudget; ++i) {
    s = step(s, expert_approach(s));
    const double d = (hover_point(s) - s.gripper_pos).norm();
    CHECK(d <= prev + 1e-12);
    prev = d;
  }
}

TEST_CASE("grasp expert attaches the block from the hover point") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    WorldState s = reset(rng());
    int steps = 0;
    while (!approach_done(s) && steps < kPhaseStepBudget) {
      s = step(s, expert_approach(s));
      ++steps;
    }
    REQUIRE(approach_done(s));
    steps = 0;
    while (!grasp_done(s) && steps < kPhaseStepBudget) {
      s = step(s, expert_grasp(s));
      ++steps;
    }
    CHECK(grasp_done(s));
    CHECK(s.attached);
  }
}

TEST_CASE("grasp expert holds still once the block is held") {
  WorldState s = reset(4);
  int steps = 0;
  while (!approach_done(s) && steps++ < kPhaseStepBudget) s = step(s, expert_approach(s));
  steps = 0;
  while (!grasp_done(s) && steps++ < kPhaseStepBudget) s = step(s, expert_grasp(s));
  REQUIRE(grasp_done(s));
  const Action a = expert_grasp(s);
  CHECK(a.dpos.norm() == 0.0);
  CHECK(a.dyaw == 0.0);
}

TEST_CASE("retract expert carries the held block to the target") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    WorldState s = reset(rng());
    int steps = 0;
    while (!approach_done(s) && steps++ < kPhaseStepBudget) s = step(s, expert_approach(s));
    steps = 0;
    while (!grasp_done(s) && steps++ < kPhaseStepBudget) s = step(s, expert_grasp(s));
    REQUIRE(grasp_done(s));
    steps = 0;
    while (!retract_done(s) && steps++ < kPhaseStepBudget) s = step(s, expert_retract(s));
    CHECK(retract_done(s));
    CHECK(task_success(s));
    CHECK(s.attached);
  }
}

TEST_CASE("full expert chain succeeds on a seed sweep") {
  CHECK(behaviours::expert_chain_success(200) >= 0.99);
}

TEST_CASE("single expert episode is reproducible per seed") {
  CHECK(behaviours::run_expert_episode(77) == behaviours::run_expert_episode(77));
}
