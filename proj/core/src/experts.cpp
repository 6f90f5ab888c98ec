#include "choreo/experts.hpp"

#include <cmath>

namespace choreo::experts {

using world::Action;
using world::Limits;
using world::Thresholds;
using world::Vec3;
using world::WorldState;
using world::wrap_angle;

namespace {

// Smooth saturating proportional step: speed * tanh(kp * err / speed),
// cruising at 95% of the per-step limit. The 95% ceiling keeps normalized
// demonstration targets strictly inside (-1,1), and the tanh profile makes
// the target a function a tanh policy head can represent exactly. With
// kp < 2 the residual error contracts by |1 - kp| each step, so each phase
// converges geometrically once inside the linear band.
double p_step(double err, double kp, double limit) {
  const double speed = 0.95 * limit;
  return speed * std::tanh(kp * err / speed);
}

Vec3 p_step3(const Vec3& err, double kp, double limit) {
  return Vec3(p_step(err.x(), kp, limit), p_step(err.y(), kp, limit),
              p_step(err.z(), kp, limit));
}

double yaw_step(const WorldState& s, const ExpertGains& g) {
  return p_step(wrap_angle(s.block_yaw - s.gripper_yaw), g.kp_yaw, Limits::dyaw_max);
}

}  // namespace

Action expert_approach(const WorldState& s, const ExpertGains& g) {
  Action a;
  a.dpos = p_step3(world::hover_point(s) - s.gripper_pos, g.kp_pos, Limits::dpos_max);
  // Yaw alignment belongs to the grasp behaviour, whose cloned action space
  // carries the yaw channel; approach demonstrations must not pre-align.
  a.dyaw = 0.0;
  a.daperture = 0.0;  // stay open
  return a;
}

Action expert_grasp(const WorldState& s, const ExpertGains& g) {
  Action a;
  if (world::grasp_done(s)) return a;
  a.dpos = p_step3(s.block_pos - s.gripper_pos, g.kp_pos, Limits::dpos_max);
  a.dyaw = yaw_step(s, g);
  const bool near = (s.gripper_pos - s.block_pos).norm() < Thresholds::grasp;
  const bool aligned =
      std::abs(wrap_angle(s.gripper_yaw - s.block_yaw)) < Thresholds::attach_yaw;
  if ((near && aligned) || s.attached) a.daperture = -Limits::daperture_max;
  return a;
}

Action expert_retract(const WorldState& s, const ExpertGains& g) {
  Action a;
  a.daperture = -Limits::daperture_max;  // hold closed
  if (world::retract_done(s)) {
    a.daperture = 0.0;
    return a;
  }
  a.dpos = p_step3(s.target_pos - s.block_pos, g.kp_pos, Limits::dpos_max);
  a.dyaw = 0.0;
  return a;
}

}  // namespace choreo::experts
