#include <Eigen/Cholesky>

#include <cmath>

#include "ramp/simdyn.hpp"

namespace ramp {

namespace {

struct BodyTerms {
  MatX jv;            // 3 x N, COM linear velocity
  MatX jw;            // 3 x N, angular velocity
  double mass = 0.0;
  Mat3 inertia;       // world frame, about the COM
  Vec3 omega;
  Vec3 acc_bias;      // COM acceleration at zero generalized acceleration
  Vec3 alpha_bias;    // angular acceleration at zero generalized acceleration
};

// Per-body Jacobians and velocity-product accelerations, base first.
std::vector<BodyTerms> body_terms(const RobotModel& model, const SystemState& state,
                                  const Kinematics& kin, bool with_bias) {
  const int nb = model.base_dofs();
  const int n = model.dof();
  const int N = nb + n;
  const auto sel = model.base_selection();
  std::vector<BodyTerms> out(n + 1);

  const Vec3 p0 = kin.base.origin;
  const Vec3 w0 = state.base_twist.tail<3>();
  {
    BodyTerms& b = out[0];
    b.mass = model.base.mass;
    b.inertia = kin.base.rotation * model.base.inertia * kin.base.rotation.transpose();
    Eigen::Matrix<double, 3, 6> jv6, jw6;
    jv6 << Mat3::Identity(), -skew(kin.base.com - p0);
    jw6 << Mat3::Zero(), Mat3::Identity();
    b.jv = MatX::Zero(3, N);
    b.jw = MatX::Zero(3, N);
    if (nb > 0) {
      b.jv.leftCols(nb) = jv6 * sel;
      b.jw.leftCols(nb) = jw6 * sel;
    }
    b.omega = w0;
    b.acc_bias = w0.cross(w0.cross(kin.base.com - p0));
    b.alpha_bias = Vec3::Zero();
  }

  // joint-origin velocity / acceleration and angular quantities per link
  std::vector<Vec3> omega(n), v_origin(n), a_origin(n), alpha(n);
  const Vec3 v0 = state.base_twist.head<3>();
  for (int i = 0; i < n; ++i) {
    const LinkSpec& l = model.links[i];
    const BodyPose& bp = kin.links[i];
    const Vec3 wp = l.parent < 0 ? w0 : omega[l.parent];
    const Vec3 vp = l.parent < 0 ? v0 : v_origin[l.parent];
    const Vec3 ap = l.parent < 0 ? Vec3::Zero() : a_origin[l.parent];
    const Vec3 alp = l.parent < 0 ? Vec3::Zero() : alpha[l.parent];
    const Vec3 op = l.parent < 0 ? kin.base.origin : kin.links[l.parent].origin;
    const Vec3 r = bp.origin - op;
    const Vec3 spin = bp.axis * state.joint_rates[i];
    omega[i] = wp + spin;
    v_origin[i] = vp + wp.cross(r);
    alpha[i] = alp + wp.cross(spin);
    a_origin[i] = ap + alp.cross(r) + wp.cross(wp.cross(r));

    BodyTerms& b = out[i + 1];
    b.mass = l.body.mass;
    b.inertia = bp.rotation * l.body.inertia * bp.rotation.transpose();
    b.omega = omega[i];
    const Vec3 rc = bp.com - bp.origin;
    b.acc_bias = a_origin[i] + alpha[i].cross(rc) + omega[i].cross(omega[i].cross(rc));
    b.alpha_bias = alpha[i];
    if (!with_bias) {
      b.acc_bias.setZero();
      b.alpha_bias.setZero();
    }

    Eigen::Matrix<double, 3, 6> jv6, jw6;
    jv6 << Mat3::Identity(), -skew(bp.com - p0);
    jw6 << Mat3::Zero(), Mat3::Identity();
    b.jv = MatX::Zero(3, N);
    b.jw = MatX::Zero(3, N);
    if (nb > 0) {
      b.jv.leftCols(nb) = jv6 * sel;
      b.jw.leftCols(nb) = jw6 * sel;
    }
    for (int a : model.chain(i)) {
      const BodyPose& ja = kin.links[a];
      b.jv.col(nb + a) = ja.axis.cross(bp.com - ja.origin);
      b.jw.col(nb + a) = ja.axis;
    }
  }
  return out;
}

VecX generalized_velocity(const RobotModel& model, const SystemState& state) {
  VecX u(model.base_dofs() + model.dof());
  u << state.reduced_twist(model), state.joint_rates;
  return u;
}

MatX assemble_mass(const std::vector<BodyTerms>& bodies, int N) {
  MatX m = MatX::Zero(N, N);
  for (const BodyTerms& b : bodies) {
    m.noalias() += b.mass * b.jv.transpose() * b.jv;
    m.noalias() += b.jw.transpose() * b.inertia * b.jw;
  }
  return m;
}

VecX assemble_bias(const std::vector<BodyTerms>& bodies, const Vec3& gravity, int N) {
  VecX bias = VecX::Zero(N);
  for (const BodyTerms& b : bodies) {
    bias.noalias() += b.jv.transpose() * (b.mass * (b.acc_bias - gravity));
    bias.noalias() +=
        b.jw.transpose() * (b.inertia * b.alpha_bias + b.omega.cross(b.inertia * b.omega));
  }
  return bias;
}

}  // namespace

MatX mass_matrix(const RobotModel& model, const SystemState& state) {
  const Kinematics kin = forward_kinematics(model, state);
  return assemble_mass(body_terms(model, state, kin, false), model.base_dofs() + model.dof());
}

VecX bias_forces(const RobotModel& model, const SystemState& state, const Vec3& gravity) {
  const Kinematics kin = forward_kinematics(model, state);
  return assemble_bias(body_terms(model, state, kin, true), gravity, model.base_dofs() + model.dof());
}

VecX tip_generalized_force(const RobotModel& model, const Kinematics& kin, int limb,
                           const Vec3& force, const Vec3& moment) {
  const int nb = model.base_dofs();
  const int last = model.limbs.at(limb).joints.back();
  const Vec3 tip = kin.tip_positions[limb];
  VecX q = VecX::Zero(nb + model.dof());
  if (nb > 0) {
    Vec6 w;
    w << force, moment + (tip - kin.base.origin).cross(force);
    q.head(nb) = model.base_selection().transpose() * w;
  }
  for (int a : model.chain(last)) {
    const BodyPose& ja = kin.links[a];
    q[nb + a] = ja.axis.dot(moment + (tip - ja.origin).cross(force));
  }
  return q;
}

double kinetic_energy(const RobotModel& model, const SystemState& state) {
  const VecX u = generalized_velocity(model, state);
  return 0.5 * u.dot(mass_matrix(model, state) * u);
}

std::vector<ContactWrench> contact_wrenches(const RobotModel& model, const SystemState& state,
                                            const std::vector<ContactPoint>& contacts) {
  const Kinematics kin = forward_kinematics(model, state);
  std::vector<ContactWrench> out(contacts.size());
  VecX u(6 + model.dof());
  u << state.base_twist, state.joint_rates;
  for (std::size_t c = 0; c < contacts.size(); ++c) {
    const ContactPoint& cp = contacts[c];
    if (!cp.attached) continue;
    const int last = model.limbs.at(cp.limb).joints.back();
    const Vec6 vel = point_jacobian(model, kin, last, kin.tip_positions[cp.limb]) * u;
    out[c].force = contact_force(cp, kin.tip_positions[cp.limb], vel.head<3>());
    out[c].moment = contact_moment(cp, kin.tip_rotations[cp.limb], vel.tail<3>());
  }
  return out;
}

VecX forward_dynamics(const RobotModel& model, const SystemState& state, const VecX& torques,
                      const std::vector<ContactPoint>& contacts, const Vec3& gravity) {
  const int nb = model.base_dofs();
  const int N = nb + model.dof();
  if (torques.size() != model.dof()) throw DimensionError("torque vector does not match the model");
  const Kinematics kin = forward_kinematics(model, state);
  const std::vector<BodyTerms> bodies = body_terms(model, state, kin, true);
  const MatX m = assemble_mass(bodies, N);
  VecX rhs = -assemble_bias(bodies, gravity, N);
  rhs.tail(model.dof()) += torques;
  bool any = false;
  for (const ContactPoint& cp : contacts) any = any || cp.attached;
  if (any) {
    VecX u(6 + model.dof());
    u << state.base_twist, state.joint_rates;
    for (const ContactPoint& cp : contacts) {
      if (!cp.attached) continue;
      const int last = model.limbs.at(cp.limb).joints.back();
      const Vec6 vel = point_jacobian(model, kin, last, kin.tip_positions[cp.limb]) * u;
      const Vec3 f = contact_force(cp, kin.tip_positions[cp.limb], vel.head<3>());
      const Vec3 mo = contact_moment(cp, kin.tip_rotations[cp.limb], vel.tail<3>());
      rhs += tip_generalized_force(model, kin, cp.limb, f, mo);
    }
  }
  return m.llt().solve(rhs);
}

namespace {

// Flat integration state: position, quaternion (w, x, y, z), joint angles,
// generalized velocity.
VecX pack(const RobotModel& model, const SystemState& s) {
  const int n = model.dof();
  const int N = model.base_dofs() + n;
  VecX x(7 + n + N);
  x.segment<3>(0) = s.base_position;
  x[3] = s.base_orientation.w();
  x.segment<3>(4) = s.base_orientation.vec();
  x.segment(7, n) = s.joint_angles;
  x.segment(7 + n, N) = generalized_velocity(model, s);
  return x;
}

SystemState unpack(const RobotModel& model, const VecX& x, double time) {
  const int n = model.dof();
  const int nb = model.base_dofs();
  SystemState s;
  s.base_position = x.segment<3>(0);
  s.base_orientation = Quat(x[3], x[4], x[5], x[6]).normalized();
  s.joint_angles = x.segment(7, n);
  s.base_twist = Vec6::Zero();
  if (nb > 0) s.base_twist = model.base_selection() * x.segment(7 + n, nb);
  s.joint_rates = x.segment(7 + n + nb, n);
  s.time = time;
  return s;
}

VecX derivative(const RobotModel& model, const VecX& x, double time, const VecX& torques,
                const std::vector<ContactPoint>& contacts, const Vec3& gravity) {
  const int n = model.dof();
  const SystemState s = unpack(model, x, time);
  VecX d(x.size());
  d.segment<3>(0) = s.base_twist.head<3>();
  const Quat q(x[3], x[4], x[5], x[6]);
  const Vec3 w = s.base_twist.tail<3>();
  const Quat dq = Quat(0.0, w.x(), w.y(), w.z()) * q;
  d[3] = 0.5 * dq.w();
  d.segment<3>(4) = 0.5 * dq.vec();
  d.segment(7, n) = s.joint_rates;
  d.tail(model.base_dofs() + n) = forward_dynamics(model, s, torques, contacts, gravity);
  return d;
}

}  // namespace

SystemState step(const RobotModel& model, const SystemState& state, const VecX& torques,
                 const std::vector<ContactPoint>& contacts, const Vec3& gravity, double dt) {
  if (!(dt > 0.0)) throw DomainError("timestep must be positive");
  const VecX x = pack(model, state);
  const double t = state.time;
  const VecX k1 = derivative(model, x, t, torques, contacts, gravity);
  const VecX k2 = derivative(model, x + 0.5 * dt * k1, t + 0.5 * dt, torques, contacts, gravity);
  const VecX k3 = derivative(model, x + 0.5 * dt * k2, t + 0.5 * dt, torques, contacts, gravity);
  const VecX k4 = derivative(model, x + dt * k3, t + dt, torques, contacts, gravity);
  const VecX next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!next.allFinite()) {
    throw NumericalBlowup("state became non-finite at t = " + std::to_string(t + dt));
  }
  return unpack(model, next, t + dt);
}

}  // namespace ramp
