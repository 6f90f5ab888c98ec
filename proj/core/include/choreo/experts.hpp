#pragma once

#include "choreo/world.hpp"

namespace choreo::experts {

// Scripted controllers used as demonstration sources for behaviour
// cloning and as scaffolds for untrained behaviours. Deterministic
// saturating proportional control; gains below 2 give geometric
// contraction of the remaining error, so each phase converges in a
// bounded number of steps.
struct ExpertGains {
  double kp_pos = 1.5;
  double kp_yaw = 1.5;
};

world::Action expert_approach(const world::WorldState& state, const ExpertGains& gains = {});
world::Action expert_grasp(const world::WorldState& state, const ExpertGains& gains = {});
world::Action expert_retract(const world::WorldState& state, const ExpertGains& gains = {});

}  // namespace choreo::experts
