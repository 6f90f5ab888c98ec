#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace choreo::world {

// Desk-scale kinematic pick-and-place: a point gripper with yaw and an
// aperture, a block on a table, a target in the air. No contact dynamics;
// a grasped block follows the gripper rigidly.

using Vec3 = Eigen::Vector3d;
using Observation = Eigen::Matrix<double, 28, 1>;

struct Limits {
  static constexpr double dpos_max = 0.03;       // m per step, per axis
  static constexpr double dyaw_max = 0.1;        // rad per step
  static constexpr double daperture_max = 0.02;  // m per step
};

struct Workspace {
  static constexpr double x_min = 1.0, x_max = 1.6;
  static constexpr double y_min = 0.4, y_max = 1.1;
  static constexpr double z_min = 0.40, z_max = 0.90;
  static constexpr double table_z = 0.42;
  static constexpr double block_z = 0.425;
  static constexpr double spawn_x_min = 1.15, spawn_x_max = 1.45;
  static constexpr double spawn_y_min = 0.55, spawn_y_max = 0.95;
  static constexpr double target_z_min = 0.45, target_z_max = 0.70;
  static constexpr double target_block_min_dist = 0.05;
};

struct Thresholds {
  static constexpr double approach = 0.01;   // to the hover point
  static constexpr double grasp = 0.005;     // gripper to block centre
  static constexpr double retract = 0.01;    // block to target
  static constexpr double attach_aperture = 0.03;
  static constexpr double release_aperture = 0.05;
  static constexpr double attach_yaw = 0.1;  // rad
  static constexpr double hover_height = 0.05;
};

constexpr int kPhaseStepBudget = 50;    // steps per behaviour segment
constexpr int kEpisodeStepBudget = 150; // steps per full-task episode

struct Action {
  Vec3 dpos = Vec3::Zero();
  double dyaw = 0.0;
  double daperture = 0.0;
};

struct WorldState {
  Vec3 gripper_pos;
  double gripper_yaw = 0.0;       // [-pi, pi)
  double gripper_aperture = 0.1;  // [0, 0.1]
  Vec3 block_pos;
  double block_yaw = 0.0;  // [-pi, pi)
  Vec3 target_pos;
  bool attached = false;
  std::int64_t step_count = 0;
  // rigid offsets captured at the moment of attachment
  Vec3 attach_offset = Vec3::Zero();
  double attach_yaw_offset = 0.0;
};

// Wraps an angle into [-pi, pi).
double wrap_angle(double a);

// Randomized block pose and target, fixed gripper home pose. Identical
// seeds yield bit-identical states.
WorldState reset(std::uint64_t seed);

// Pure transition. Clamps every action component, keeps the gripper in
// the workspace, maintains the attachment rules. Throws
// std::invalid_argument on a non-finite action component.
WorldState step(const WorldState& state, const Action& action);

// 28-entry state vector; velocity entries are (current - prev) pose
// differences. At reset pass prev = state.
Observation observe(const WorldState& state, const WorldState& prev);

// Fixed affine rescaling of an observation for network input: position
// entries are centred on the workspace and scaled to roughly [-1, 1],
// the relative-position entries become differences of the normalized
// positions, and the finger entries are centred on the half-open
// aperture. Angle and velocity entries pass through unchanged. The
// constants are workspace geometry, not learned.
Observation normalized(const Observation& obs);

Vec3 hover_point(const WorldState& state);

bool approach_done(const WorldState& state);
bool grasp_done(const WorldState& state);
bool retract_done(const WorldState& state);
bool task_success(const WorldState& state);

}  // namespace choreo::world
