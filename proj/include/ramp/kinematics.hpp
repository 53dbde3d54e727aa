#pragma once

#include <optional>
#include <vector>

#include "ramp/model.hpp"

namespace ramp {

struct BodyPose {
  Mat3 rotation = Mat3::Identity();  // body frame -> world
  Vec3 origin = Vec3::Zero();        // joint origin (base: base origin)
  Vec3 com = Vec3::Zero();
  Vec3 axis = Vec3::UnitZ();         // joint axis in world (unused for the base)
};

struct Kinematics {
  BodyPose base;
  std::vector<BodyPose> links;
  std::vector<Vec3> tip_positions;   // x_e per limb
  std::vector<Mat3> tip_rotations;
};

/// Poses of every body and end-effector in the inertial frame.
Kinematics forward_kinematics(const RobotModel& model, const SystemState& state);

/// Same as above but from a base pose and joint angles only.
Kinematics forward_kinematics(const RobotModel& model, const Vec3& base_position,
                              const Quat& base_orientation, const VecX& joint_angles);

/// Which components of the end-effector motion a limb task controls.
///   Position: translation (x, y, z; planar: x, y)
///   Pose:     translation + rotation (planar: x, y, theta_z)
enum class Task { Position, Pose };

/// Rows of the world (v, w) 6-vector that a task keeps.
std::vector<int> task_rows(const RobotModel& model, Task task);

/// Task used for supporting limbs (Clamp contacts hold the orientation too).
Task support_task(const RobotModel& model);

/// 6 x (6 + n) world Jacobian of a point rigidly attached to `link`
/// (link = -1 for the base). Columns: spatial base twist, then joints.
MatX point_jacobian(const RobotModel& model, const Kinematics& kin, int link, const Vec3& point);

struct DampedInverse {
  MatX matrix;
  double sigma_min = 0.0;
  double damping = 0.0;
};

/// Damped least-squares pseudoinverse J^T (J J^T + l^2 I)^-1 (or the
/// column-space form for tall matrices). l = 1e-6, raised to 1e-3 when the
/// smallest singular value drops below 1e-4.
DampedInverse damped_pinv(const MatX& J);

struct LimbJacobian {
  MatX base;         // task x base_dofs: maps reduced base twist to x_e rate
  MatX manip;        // task x limb joints
  MatX manip_pinv;   // damped pseudoinverse of manip
  double sigma_min = 0.0;
};

LimbJacobian jacobians(const RobotModel& model, const SystemState& state, int limb,
                       Task task = Task::Position);
LimbJacobian jacobians(const RobotModel& model, const Kinematics& kin, int limb,
                       Task task = Task::Position);

/// Rate of an end-effector task for the given state.
VecX end_effector_velocity(const RobotModel& model, const SystemState& state, int limb,
                           Task task = Task::Position);

struct InertiaSet {
  MatX base;                    // H_b, base_dofs x base_dofs
  std::vector<MatX> coupling;   // H_bm,i per limb, base_dofs x limb joints
};

/// Full 6 x (6 + n) momentum matrix about the base origin, spatial columns.
MatX momentum_matrix(const RobotModel& model, const Kinematics& kin);

/// H_bm of one limb only (reduced rows), without assembling the full matrix.
MatX coupling_matrix(const RobotModel& model, const Kinematics& kin, int limb);

InertiaSet inertia_matrices(const RobotModel& model, const SystemState& state);
InertiaSet inertia_matrices(const RobotModel& model, const Kinematics& kin);

struct MomentumState {
  VecX total;        // reduced momentum (planar: Px, Py, Lz)
  VecX base_part;
  VecX support_part;
  VecX swing_part;
};

/// Momentum about the base origin split into base, supporting and swinging
/// contributions. Limbs not in swing_set count as supporting.
MomentumState system_momentum(const RobotModel& model, const SystemState& state,
                              const std::vector<int>& swing_set);

/// Spatial momentum (linear, angular) about an arbitrary world point.
Vec6 spatial_momentum_about(const RobotModel& model, const SystemState& state,
                            const Vec3& point);

struct IkTarget {
  Vec3 position = Vec3::Zero();
  std::optional<Quat> orientation;   // enables the Pose task
};

struct IkOptions {
  int max_iterations = 200;
  double max_step = 0.2;        // rad per iteration, per joint
  double tolerance = 1e-12;     // task error at which iteration stops
  double accept = 1e-6;         // task error accepted when the cap is hit
  bool enforce_limits = true;
};

/// Damped least-squares inverse kinematics of one limb for a fixed base pose.
/// Returns the limb joint angles (root to tip).
/// Throws UnreachableTarget or JointLimitError.
VecX inverse_kinematics(const RobotModel& model, int limb, const IkTarget& target,
                        const Vec3& base_position, const Quat& base_orientation,
                        const VecX& seed, const IkOptions& options = {});

}  // namespace ramp
