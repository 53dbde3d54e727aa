#pragma once

#include <string>
#include <vector>

#include "ramp/gait.hpp"
#include "ramp/kinematics.hpp"

namespace ramp {

// ---------------------------------------------------------------------------
// Contacts

struct ContactParameters {
  double stiffness = 4000.0;        // N/m
  double damping = 1.0;             // N s/m
  double holding_force = 0.9;       // N
  double rot_stiffness = 0.0;       // N m/rad, Clamp contacts only
  double rot_damping = 0.0;         // N m s/rad
  Vec3 normal = Vec3::UnitZ();      // surface normal, pointing away from the surface

  void validate() const;
};

/// Gripper anchored to the surface at its touchdown point.
struct ContactPoint {
  int limb = 0;
  bool attached = false;
  Vec3 anchor = Vec3::Zero();
  Quat anchor_rotation = Quat::Identity();
  bool clamp = false;               // holds orientation too
  ContactParameters params{};
};

/// Spring-damper force on the end-effector, F = -k (p - anchor) - c v.
Vec3 contact_force(const ContactPoint& contact, const Vec3& ee_position, const Vec3& ee_velocity);

/// Restoring moment of a clamp (zero for point contacts).
Vec3 contact_moment(const ContactPoint& contact, const Mat3& ee_rotation, const Vec3& ee_angular_velocity);

/// Part of the force pulling the end-effector away from the surface.
double tensile_component(const ContactPoint& contact, const Vec3& force);

enum class Detachment { Holds, Detaches };

Detachment detachment_check(const ContactPoint& contact, const Vec3& force);

// ---------------------------------------------------------------------------
// Dynamics
//
// Generalized velocity u = [reduced base twist; joint rates].

/// Mass matrix of the whole tree (base_dofs + n square).
MatX mass_matrix(const RobotModel& model, const SystemState& state);

/// Velocity-product and gravity terms b with M u_dot + b = Q.
VecX bias_forces(const RobotModel& model, const SystemState& state, const Vec3& gravity);

/// Generalized force of a wrench (force, moment) applied at a limb tip.
VecX tip_generalized_force(const RobotModel& model, const Kinematics& kin, int limb,
                           const Vec3& force, const Vec3& moment);

double kinetic_energy(const RobotModel& model, const SystemState& state);

/// Generalized acceleration under joint torques, contact forces and gravity.
VecX forward_dynamics(const RobotModel& model, const SystemState& state, const VecX& torques,
                      const std::vector<ContactPoint>& contacts, const Vec3& gravity);

struct ContactWrench {
  Vec3 force = Vec3::Zero();
  Vec3 moment = Vec3::Zero();
};

/// Contact wrenches for every contact at a state (zero when detached).
std::vector<ContactWrench> contact_wrenches(const RobotModel& model, const SystemState& state,
                                            const std::vector<ContactPoint>& contacts);

/// One fourth-order Runge-Kutta step with the torques held constant.
/// Throws NumericalBlowup when the result is not finite.
SystemState step(const RobotModel& model, const SystemState& state, const VecX& torques,
                 const std::vector<ContactPoint>& contacts, const Vec3& gravity, double dt);

// ---------------------------------------------------------------------------
// Control

struct PdGains {
  VecX kp;   // N m/rad per joint
  VecX kd;   // N m s/rad per joint
};

/// tau = kp (phi_ref - phi) + kd (phi_dot_ref - phi_dot) at time t.
VecX pd_torques(const MotionPlan& plan, const SystemState& state, double t, const PdGains& gains);

// ---------------------------------------------------------------------------
// Scenario runs

struct SimConfig {
  Vec3 gravity = Vec3::Zero();
  double timestep = 1e-3;
  double duration = 60.0;           // hard cap on simulated time, s
  PdGains gains;
  ContactParameters contact;
  double goal_displacement = 0.0;   // m along goal_direction
  Vec3 goal_direction = Vec3::UnitX();
  double goal_tolerance = 0.005;
  double float_time = 2.0;          // time simulated after an unplanned detachment
  double log_interval = 1e-3;

  /// Smallest timestep bound for the given model.
  static double stable_timestep(const RobotModel& model, const ContactParameters& contact);

  void validate(const RobotModel& model) const;   // throws ConfigError
};

enum class Termination { GoalReached, DetachedFloating, Singularity, TimeOut, NumericalBlowup };

std::string to_string(Termination cause);

struct ContactSample {
  bool attached = false;
  Vec3 anchor = Vec3::Zero();
  Quat anchor_rotation = Quat::Identity();
  Vec3 force = Vec3::Zero();
  Vec3 moment = Vec3::Zero();
  double tensile = 0.0;
};

struct LogSample {
  SystemState state;
  std::vector<ContactSample> contacts;
  Vec6 momentum = Vec6::Zero();     // spatial momentum about the base origin
  Vec6 external = Vec6::Zero();     // net contact wrench about the base origin
};

struct SimEvent {
  double time = 0.0;
  std::string kind;                 // release, grasp, detachment, singularity, ...
  int limb = -1;
  double value = 0.0;               // tensile force for detachments
  std::string detail;
};

struct SimLog {
  std::vector<LogSample> samples;
  std::vector<SimEvent> events;
  Termination cause = Termination::TimeOut;
  double end_time = 0.0;
  double displacement = 0.0;        // base travel along the goal direction
  int unplanned_detachments = 0;
};

/// Runs the plan with PD tracking, compliant contacts and detachment.
SimLog run_scenario(const RobotModel& model, const MotionPlan& plan, const SimConfig& config);

}  // namespace ramp
