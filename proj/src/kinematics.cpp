#include "ramp/kinematics.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace ramp {

namespace {

// Rows of the 6-vector momentum kept by a model.
MatX momentum_rows(const RobotModel& model) {
  if (model.base_mode == BaseMode::Planar) {
    return model.base_selection().transpose();
  }
  return MatX::Identity(6, 6);
}

void check_limb(const RobotModel& model, int limb) {
  if (limb < 0 || limb >= model.num_limbs()) {
    throw DimensionError("limb index " + std::to_string(limb) + " out of range");
  }
}

Vec3 rotation_error(const Mat3& target, const Mat3& current) {
  const Eigen::AngleAxisd aa(Mat3(target * current.transpose()));
  return aa.angle() * aa.axis();
}

// Kinematics of a single serial limb for a fixed base pose.
struct LimbChain {
  std::vector<Vec3> origins;
  std::vector<Vec3> axes;
  Vec3 tip;
  Mat3 tip_rotation;
};

LimbChain limb_chain(const RobotModel& model, int limb, const Vec3& base_position,
                     const Mat3& base_rotation, const VecX& q) {
  const LimbSpec& spec = model.limbs[limb];
  LimbChain c;
  c.origins.reserve(spec.joints.size());
  c.axes.reserve(spec.joints.size());
  Mat3 r = base_rotation;
  Vec3 p = base_position;
  for (std::size_t k = 0; k < spec.joints.size(); ++k) {
    const LinkSpec& l = model.links[spec.joints[k]];
    p = p + r * l.offset;
    const Mat3 rj = r * l.mount;
    c.origins.push_back(p);
    c.axes.push_back(rj * l.axis);
    r = rj * Eigen::AngleAxisd(q[k], l.axis).toRotationMatrix();
  }
  c.tip = p + r * spec.tip;
  c.tip_rotation = r;
  return c;
}

}  // namespace

Kinematics forward_kinematics(const RobotModel& model, const Vec3& base_position,
                              const Quat& base_orientation, const VecX& joint_angles) {
  if (joint_angles.size() != model.dof()) {
    throw DimensionError("joint angle vector does not match model " + model.name);
  }
  Kinematics k;
  k.base.rotation = base_orientation.normalized().toRotationMatrix();
  k.base.origin = base_position;
  k.base.com = base_position + k.base.rotation * model.base.com;
  k.links.resize(model.links.size());
  for (int i = 0; i < model.dof(); ++i) {
    const LinkSpec& l = model.links[i];
    const BodyPose& parent = l.parent < 0 ? k.base : k.links[l.parent];
    BodyPose& b = k.links[i];
    const Mat3 rj = parent.rotation * l.mount;
    b.axis = rj * l.axis;
    b.rotation = rj * Eigen::AngleAxisd(joint_angles[i], l.axis).toRotationMatrix();
    b.origin = parent.origin + parent.rotation * l.offset;
    b.com = b.origin + b.rotation * l.body.com;
  }
  k.tip_positions.resize(model.limbs.size());
  k.tip_rotations.resize(model.limbs.size());
  for (int j = 0; j < model.num_limbs(); ++j) {
    const BodyPose& last = k.links[model.limbs[j].joints.back()];
    k.tip_positions[j] = last.origin + last.rotation * model.limbs[j].tip;
    k.tip_rotations[j] = last.rotation;
  }
  return k;
}

Kinematics forward_kinematics(const RobotModel& model, const SystemState& state) {
  check_dimensions(model, state);
  return forward_kinematics(model, state.base_position, state.base_orientation,
                            state.joint_angles);
}

std::vector<int> task_rows(const RobotModel& model, Task task) {
  if (model.planar()) {
    return task == Task::Position ? std::vector<int>{0, 1} : std::vector<int>{0, 1, 5};
  }
  return task == Task::Position ? std::vector<int>{0, 1, 2}
                                : std::vector<int>{0, 1, 2, 3, 4, 5};
}

Task support_task(const RobotModel& model) {
  return model.contact_kind == ContactKind::Clamp ? Task::Pose : Task::Position;
}

MatX point_jacobian(const RobotModel& model, const Kinematics& kin, int link, const Vec3& point) {
  const int n = model.dof();
  MatX j = MatX::Zero(6, 6 + n);
  j.block<3, 3>(0, 0).setIdentity();
  j.block<3, 3>(0, 3) = -skew(point - kin.base.origin);
  j.block<3, 3>(3, 3).setIdentity();
  if (link < 0) return j;
  for (int a : model.chain(link)) {
    const BodyPose& b = kin.links[a];
    j.block<3, 1>(0, 6 + a) = b.axis.cross(point - b.origin);
    j.block<3, 1>(3, 6 + a) = b.axis;
  }
  return j;
}

DampedInverse damped_pinv(const MatX& J) {
  DampedInverse out;
  const bool wide = J.rows() <= J.cols();
  const MatX gram = wide ? MatX(J * J.transpose()) : MatX(J.transpose() * J);
  Eigen::SelfAdjointEigenSolver<MatX> es(gram, Eigen::EigenvaluesOnly);
  out.sigma_min = std::sqrt(std::max(0.0, es.eigenvalues().minCoeff()));
  out.damping = out.sigma_min < 1e-4 ? 1e-3 : 1e-6;
  const MatX damped =
      gram + out.damping * out.damping * MatX::Identity(gram.rows(), gram.cols());
  Eigen::LDLT<MatX> ldlt(damped);
  if (wide) {
    out.matrix = J.transpose() * ldlt.solve(MatX::Identity(gram.rows(), gram.rows()));
  } else {
    out.matrix = ldlt.solve(J.transpose());
  }
  return out;
}

LimbJacobian jacobians(const RobotModel& model, const Kinematics& kin, int limb, Task task) {
  check_limb(model, limb);
  const LimbSpec& spec = model.limbs[limb];
  const MatX full = point_jacobian(model, kin, spec.joints.back(), kin.tip_positions[limb]);
  const std::vector<int> rows = task_rows(model, task);
  const auto sel = model.base_selection();
  LimbJacobian out;
  out.base.resize(static_cast<int>(rows.size()), model.base_dofs());
  out.manip.resize(static_cast<int>(rows.size()), static_cast<int>(spec.joints.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.base.row(r) = full.block(rows[r], 0, 1, 6) * sel;
    for (std::size_t c = 0; c < spec.joints.size(); ++c) {
      out.manip(r, c) = full(rows[r], 6 + spec.joints[c]);
    }
  }
  DampedInverse inv = damped_pinv(out.manip);
  out.manip_pinv = std::move(inv.matrix);
  out.sigma_min = inv.sigma_min;
  return out;
}

LimbJacobian jacobians(const RobotModel& model, const SystemState& state, int limb, Task task) {
  return jacobians(model, forward_kinematics(model, state), limb, task);
}

VecX end_effector_velocity(const RobotModel& model, const SystemState& state, int limb, Task task) {
  const LimbJacobian j = jacobians(model, state, limb, task);
  return j.base * state.reduced_twist(model) + j.manip * state.limb_rates(model, limb);
}

MatX momentum_matrix(const RobotModel& model, const Kinematics& kin) {
  const int n = model.dof();
  MatX h = MatX::Zero(6, 6 + n);
  const Vec3& pb = kin.base.origin;
  auto accumulate = [&](const BodySpec& body, const BodyPose& pose, int link) {
    const Vec3 r = pose.com - pb;
    const Mat3 iw = pose.rotation * body.inertia * pose.rotation.transpose();
    const Mat3 rx = skew(r);
    // base columns: v_com = v - [r]x w, w_body = w
    h.block<3, 3>(0, 0) += body.mass * Mat3::Identity();
    h.block<3, 3>(0, 3) += -body.mass * rx;
    h.block<3, 3>(3, 0) += body.mass * rx;
    h.block<3, 3>(3, 3) += iw - body.mass * rx * rx;
    if (link < 0) return;
    for (int a : model.chain(link)) {
      const BodyPose& j = kin.links[a];
      const Vec3 jv = j.axis.cross(pose.com - j.origin);
      h.block<3, 1>(0, 6 + a) += body.mass * jv;
      h.block<3, 1>(3, 6 + a) += iw * j.axis + body.mass * r.cross(jv);
    }
  };
  accumulate(model.base, kin.base, -1);
  for (int i = 0; i < n; ++i) accumulate(model.links[i].body, kin.links[i], i);
  return h;
}

MatX coupling_matrix(const RobotModel& model, const Kinematics& kin, int limb) {
  check_limb(model, limb);
  const std::vector<int>& joints = model.limbs[limb].joints;
  const int nj = static_cast<int>(joints.size());
  Eigen::Matrix<double, 6, Eigen::Dynamic> h = Eigen::Matrix<double, 6, Eigen::Dynamic>::Zero(6, nj);
  const Vec3& pb = kin.base.origin;
  for (int i : joints) {
    const BodySpec& body = model.links[i].body;
    const BodyPose& pose = kin.links[i];
    const Vec3 r = pose.com - pb;
    const Mat3 iw = pose.rotation * body.inertia * pose.rotation.transpose();
    // only joints up to i move body i
    for (int k = 0; k < nj && joints[k] <= i; ++k) {
      const BodyPose& j = kin.links[joints[k]];
      const Vec3 jv = j.axis.cross(pose.com - j.origin);
      h.block<3, 1>(0, k) += body.mass * jv;
      h.block<3, 1>(3, k) += iw * j.axis + body.mass * r.cross(jv);
    }
  }
  return momentum_rows(model) * h;
}

InertiaSet inertia_matrices(const RobotModel& model, const Kinematics& kin) {
  const MatX h = momentum_matrix(model, kin);
  const MatX rows = momentum_rows(model);
  const auto sel = model.base_selection();
  InertiaSet out;
  out.base = rows * h.leftCols(6) * sel;
  out.coupling.reserve(model.limbs.size());
  for (const LimbSpec& limb : model.limbs) {
    MatX c(rows.rows(), static_cast<int>(limb.joints.size()));
    for (std::size_t k = 0; k < limb.joints.size(); ++k) {
      c.col(k) = rows * h.col(6 + limb.joints[k]);
    }
    out.coupling.push_back(std::move(c));
  }
  return out;
}

InertiaSet inertia_matrices(const RobotModel& model, const SystemState& state) {
  return inertia_matrices(model, forward_kinematics(model, state));
}

MomentumState system_momentum(const RobotModel& model, const SystemState& state,
                              const std::vector<int>& swing_set) {
  for (int s : swing_set) check_limb(model, s);
  const Kinematics kin = forward_kinematics(model, state);
  const InertiaSet in = inertia_matrices(model, kin);
  MomentumState m;
  m.base_part = in.base * state.reduced_twist(model);
  m.support_part = VecX::Zero(m.base_part.size());
  m.swing_part = VecX::Zero(m.base_part.size());
  for (int limb = 0; limb < model.num_limbs(); ++limb) {
    const VecX part = in.coupling[limb] * state.limb_rates(model, limb);
    const bool swinging = std::find(swing_set.begin(), swing_set.end(), limb) != swing_set.end();
    (swinging ? m.swing_part : m.support_part) += part;
  }
  m.total = m.base_part + m.support_part + m.swing_part;
  return m;
}

Vec6 spatial_momentum_about(const RobotModel& model, const SystemState& state, const Vec3& point) {
  const Kinematics kin = forward_kinematics(model, state);
  VecX u(6 + model.dof());
  u << state.base_twist, state.joint_rates;
  const Vec6 about_base = momentum_matrix(model, kin) * u;
  Vec6 out = about_base;
  // L_point = L_base + (p_base - point) x P
  out.tail<3>() += (kin.base.origin - point).cross(about_base.head<3>());
  return out;
}

VecX inverse_kinematics(const RobotModel& model, int limb, const IkTarget& target,
                        const Vec3& base_position, const Quat& base_orientation,
                        const VecX& seed, const IkOptions& options) {
  check_limb(model, limb);
  const LimbSpec& spec = model.limbs[limb];
  const int nj = static_cast<int>(spec.joints.size());
  if (seed.size() != nj) throw DimensionError("IK seed does not match limb " + spec.name);

  const Mat3 rb = base_orientation.normalized().toRotationMatrix();
  const Task task = target.orientation ? Task::Pose : Task::Position;
  const std::vector<int> rows = task_rows(model, task);
  const int nr = static_cast<int>(rows.size());
  const Mat3 target_rot =
      target.orientation ? target.orientation->normalized().toRotationMatrix() : Mat3::Identity();

  {
    const LinkSpec& root = model.links[spec.joints.front()];
    const Vec3 shoulder = base_position + rb * root.offset;
    if ((target.position - shoulder).norm() > model.reach(limb) + 1e-12) {
      throw UnreachableTarget("target beyond the reach of limb " + spec.name);
    }
  }

  VecX q = seed;
  double err_norm = kInf;
  for (int it = 0; it <= options.max_iterations; ++it) {
    const LimbChain c = limb_chain(model, limb, base_position, rb, q);
    Vec6 e6 = Vec6::Zero();
    e6.head<3>() = target.position - c.tip;
    if (target.orientation) e6.tail<3>() = rotation_error(target_rot, c.tip_rotation);
    VecX err(nr);
    for (int r = 0; r < nr; ++r) err[r] = e6[rows[r]];
    err_norm = err.norm();
    if (err_norm <= options.tolerance || it == options.max_iterations) break;

    MatX j(nr, nj);
    for (int k = 0; k < nj; ++k) {
      Vec6 col;
      col.head<3>() = c.axes[k].cross(c.tip - c.origins[k]);
      col.tail<3>() = c.axes[k];
      for (int r = 0; r < nr; ++r) j(r, k) = col[rows[r]];
    }
    VecX dq = damped_pinv(j).matrix * err;
    const double biggest = dq.cwiseAbs().maxCoeff();
    if (biggest > options.max_step) dq *= options.max_step / biggest;
    if (biggest < 1e-15) break;
    q += dq;
  }
  if (!(err_norm <= options.accept)) {
    throw UnreachableTarget("IK for limb " + spec.name + " did not converge (residual " +
                            std::to_string(err_norm) + " m)");
  }
  if (options.enforce_limits) {
    for (int k = 0; k < nj; ++k) {
      const LinkSpec& l = model.links[spec.joints[k]];
      if (q[k] < l.lower - 1e-12 || q[k] > l.upper + 1e-12) {
        throw JointLimitError("IK solution for limb " + spec.name + " violates the limits of joint " +
                              std::to_string(spec.joints[k]));
      }
    }
  }
  return q;
}

}  // namespace ramp
