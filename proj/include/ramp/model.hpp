#pragma once

#include <string>
#include <vector>

#include "ramp/common.hpp"

namespace ramp {

/// How the base link moves.
///   Spatial: free-floating, 6 DOF (linear + angular velocity, world frame)
///   Planar:  free-floating in the x-y plane, 3 DOF (vx, vy, wz)
///   Fixed:   welded to the world (used for fixed-base test rigs)
enum class BaseMode { Spatial, Planar, Fixed };

/// How a supporting end-effector is held by the surface.
///   Point: position-only anchor (spring in translation)
///   Clamp: position + orientation anchor (adds a rotational spring)
enum class ContactKind { Point, Clamp };

struct BodySpec {
  std::string name;
  double mass = 0.0;              // kg
  Mat3 inertia = Mat3::Zero();    // kg m^2 about the COM, body frame
  Vec3 com = Vec3::Zero();        // COM in the body frame
  double length = 0.0;            // m, informational for the base
};

/// One link of the tree together with the revolute joint that drives it.
struct LinkSpec {
  BodySpec body;
  int parent = -1;                       // -1 = base
  Vec3 offset = Vec3::Zero();            // joint origin in the parent frame
  Mat3 mount = Mat3::Identity();         // fixed rotation parent -> joint frame
  Vec3 axis = Vec3::UnitZ();             // joint axis in the joint frame
  double lower = -kPi;                   // rad
  double upper = kPi;                    // rad
};

struct LimbSpec {
  std::string name;
  std::vector<int> joints;               // root to tip
  Vec3 tip = Vec3::Zero();               // end-effector point in the last link frame
};

class RobotModel {
 public:
  std::string name;
  BaseMode base_mode = BaseMode::Spatial;
  ContactKind contact_kind = ContactKind::Point;
  BodySpec base;
  std::vector<LinkSpec> links;
  std::vector<LimbSpec> limbs;

  int dof() const { return static_cast<int>(links.size()); }
  int num_limbs() const { return static_cast<int>(limbs.size()); }
  bool planar() const { return base_mode == BaseMode::Planar; }

  /// Number of base velocity coordinates: 6, 3 or 0.
  int base_dofs() const;

  /// 6 x base_dofs() matrix embedding the reduced base twist into (v, w).
  Eigen::Matrix<double, 6, Eigen::Dynamic> base_selection() const;

  /// Ancestor chain (root first) of a link, including the link itself.
  const std::vector<int>& chain(int link) const { return chains_.at(link); }

  /// Limb owning a joint, -1 if none.
  int limb_of(int joint) const { return limb_of_.at(joint); }

  /// Sum of link spans from the first joint to the tip.
  double reach(int limb) const;

  /// Checks every structural and inertial invariant and caches the tree
  /// topology. Must be called after the fields are filled in.
  void finalize();

  bool finalized() const { return !chains_.empty() || links.empty(); }

 private:
  std::vector<std::vector<int>> chains_;
  std::vector<int> limb_of_;
};

/// Full dynamic state of the robot. The base twist is always stored as a
/// spatial (v, w) pair in world coordinates; planar models only use
/// vx, vy and wz.
struct SystemState {
  Vec3 base_position = Vec3::Zero();
  Quat base_orientation = Quat::Identity();
  Vec6 base_twist = Vec6::Zero();
  VecX joint_angles;
  VecX joint_rates;
  double time = 0.0;

  static SystemState zero(const RobotModel& model);

  /// Rotation about z of a planar base.
  double planar_angle() const;
  void set_planar_angle(double angle);

  /// Base twist restricted to the model's base DOFs.
  VecX reduced_twist(const RobotModel& model) const;
  void set_reduced_twist(const RobotModel& model, const VecX& twist);

  VecX limb_angles(const RobotModel& model, int limb) const;
  void set_limb_angles(const RobotModel& model, int limb, const VecX& q);
  VecX limb_rates(const RobotModel& model, int limb) const;
  void set_limb_rates(const RobotModel& model, int limb, const VecX& qd);
};

/// Throws DimensionError when the state does not match the model.
void check_dimensions(const RobotModel& model, const SystemState& state);

/// Indices of joints outside [lower, upper] (with tolerance).
std::vector<int> joint_limit_violations(const RobotModel& model, const VecX& q,
                                        double tol = 1e-12);

}  // namespace ramp
