#include "choreo/world.hpp"

#include <cmath>
#include <stdexcept>

#include "choreo/rng.hpp"

namespace choreo::world {

namespace {
constexpr double kPi = 3.14159265358979323846;

double clampd(double v, double lo, double hi) {
  return v < lo ? lo : (v > hi ? hi : v);
}
}  // namespace

double wrap_angle(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a < 0.0) a += 2.0 * kPi;
  return a - kPi;
}

WorldState reset(std::uint64_t seed) {
  Rng rng(seed);
  WorldState s;
  s.gripper_pos = Vec3(1.3, 0.75, 0.60);
  s.gripper_yaw = 0.0;
  s.gripper_aperture = 0.1;
  s.block_pos = Vec3(uniform(rng, Workspace::spawn_x_min, Workspace::spawn_x_max),
                     uniform(rng, Workspace::spawn_y_min, Workspace::spawn_y_max),
                     Workspace::block_z);
  s.block_yaw = uniform(rng, -kPi / 2.0, kPi / 2.0);
  do {
    s.target_pos = Vec3(uniform(rng, Workspace::spawn_x_min, Workspace::spawn_x_max),
                        uniform(rng, Workspace::spawn_y_min, Workspace::spawn_y_max),
                        uniform(rng, Workspace::target_z_min, Workspace::target_z_max));
  } while ((s.target_pos - s.block_pos).norm() < Workspace::target_block_min_dist);
  s.attached = false;
  s.step_count = 0;
  return s;
}

WorldState step(const WorldState& state, const Action& action) {
  if (!action.dpos.allFinite() || !std::isfinite(action.dyaw) ||
      !std::isfinite(action.daperture))
    throw std::invalid_argument("step: non-finite action component");

  WorldState s = state;
  for (int i = 0; i < 3; ++i)
    s.gripper_pos[i] += clampd(action.dpos[i], -Limits::dpos_max, Limits::dpos_max);
  s.gripper_pos.x() = clampd(s.gripper_pos.x(), Workspace::x_min, Workspace::x_max);
  s.gripper_pos.y() = clampd(s.gripper_pos.y(), Workspace::y_min, Workspace::y_max);
  s.gripper_pos.z() = clampd(s.gripper_pos.z(), Workspace::z_min, Workspace::z_max);
  s.gripper_yaw = wrap_angle(s.gripper_yaw +
                             clampd(action.dyaw, -Limits::dyaw_max, Limits::dyaw_max));
  s.gripper_aperture = clampd(
      s.gripper_aperture +
          clampd(action.daperture, -Limits::daperture_max, Limits::daperture_max),
      0.0, 0.1);

  if (s.attached) {
    if (s.gripper_aperture > Thresholds::release_aperture) {
      s.attached = false;
    } else {
      s.block_pos = s.gripper_pos + s.attach_offset;
      s.block_yaw = wrap_angle(s.gripper_yaw + s.attach_yaw_offset);
    }
  } else {
    const bool near = (s.gripper_pos - s.block_pos).norm() < Thresholds::grasp;
    const bool aligned =
        std::abs(wrap_angle(s.gripper_yaw - s.block_yaw)) < Thresholds::attach_yaw;
    if (s.gripper_aperture <= Thresholds::attach_aperture && near && aligned) {
      s.attached = true;
      s.attach_offset = s.block_pos - s.gripper_pos;
      s.attach_yaw_offset = wrap_angle(s.block_yaw - s.gripper_yaw);
    }
  }
  s.step_count = state.step_count + 1;
  return s;
}

Observation observe(const WorldState& s, const WorldState& prev) {
  Observation o;
  o.segment<3>(0) = s.gripper_pos;
  o.segment<3>(3) = s.block_pos;
  o.segment<3>(6) = s.block_pos - s.gripper_pos;
  o(9) = s.gripper_aperture / 2.0;
  o(10) = s.gripper_aperture / 2.0;
  o(11) = std::sin(s.block_yaw);
  o(12) = std::cos(s.block_yaw);
  o(13) = wrap_angle(s.block_yaw - s.gripper_yaw);
  o.segment<3>(14) = s.block_pos - prev.block_pos;
  o(17) = 0.0;
  o(18) = 0.0;
  o(19) = wrap_angle(s.block_yaw - prev.block_yaw);
  o.segment<3>(20) = s.gripper_pos - prev.gripper_pos;
  o(23) = (s.gripper_aperture - prev.gripper_aperture) / 2.0;
  o(24) = (s.gripper_aperture - prev.gripper_aperture) / 2.0;
  o.segment<3>(25) = s.target_pos;
  return o;
}

Observation normalized(const Observation& obs) {
  const Vec3 center(0.5 * (Workspace::x_min + Workspace::x_max),
                    0.5 * (Workspace::y_min + Workspace::y_max),
                    0.5 * (Workspace::z_min + Workspace::z_max));
  const Vec3 inv_half(2.0 / (Workspace::x_max - Workspace::x_min),
                      2.0 / (Workspace::y_max - Workspace::y_min),
                      2.0 / (Workspace::z_max - Workspace::z_min));
  Observation o = obs;
  o.segment<3>(0) = (obs.segment<3>(0) - center).cwiseProduct(inv_half);
  o.segment<3>(3) = (obs.segment<3>(3) - center).cwiseProduct(inv_half);
  // The relative-position entries carry the centimetre-scale signal the
  // precision predicates test; they get a tighter scale than the absolute
  // positions so small differences stay visible to the first layer.
  o.segment<3>(6) = obs.segment<3>(6) * 10.0;
  o(9) = (obs(9) - 0.025) * 20.0;
  o(10) = (obs(10) - 0.025) * 20.0;
  // The target-to-block difference is a fixed linear combination of other
  // entries; routing it through the redundant channels (17 and 18 are
  // identically zero, 24 duplicates 23) is equivalent to a structured
  // initialization of the first dense layer and gives the retract readout
  // the same relative-error signal the other behaviours get natively.
  o(17) = (obs(25) - obs(3)) * 10.0;
  o(18) = (obs(26) - obs(4)) * 10.0;
  o(24) = (obs(27) - obs(5)) * 10.0;
  o.segment<3>(25) = (obs.segment<3>(25) - center).cwiseProduct(inv_half);
  return o;
}

Vec3 hover_point(const WorldState& s) {
  return s.block_pos + Vec3(0.0, 0.0, Thresholds::hover_height);
}

bool approach_done(const WorldState& s) {
  return (s.gripper_pos - hover_point(s)).norm() < Thresholds::approach;
}

bool grasp_done(const WorldState& s) {
  return s.attached && (s.gripper_pos - s.block_pos).norm() < Thresholds::grasp;
}

bool retract_done(const WorldState& s) {
  return s.attached && (s.target_pos - s.block_pos).norm() < Thresholds::retract;
}

bool task_success(const WorldState& s) { return retract_done(s); }

}  // namespace choreo::world
