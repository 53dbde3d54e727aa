#include "ramp/model.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <set>

namespace ramp {

namespace {

void check_body(const BodySpec& b, const std::string& what) {
  if (!(b.mass > 0.0) || !std::isfinite(b.mass)) {
    throw ModelError(what + ": mass must be positive");
  }
  if (!b.inertia.isApprox(b.inertia.transpose(), 1e-12)) {
    throw ModelError(what + ": inertia tensor is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(b.inertia, Eigen::EigenvaluesOnly);
  if (!(es.eigenvalues().minCoeff() > 0.0)) {
    throw ModelError(what + ": inertia tensor is not positive definite");
  }
}

}  // namespace

int RobotModel::base_dofs() const {
  switch (base_mode) {
    case BaseMode::Spatial: return 6;
    case BaseMode::Planar: return 3;
    case BaseMode::Fixed: return 0;
  }
  return 0;
}

Eigen::Matrix<double, 6, Eigen::Dynamic> RobotModel::base_selection() const {
  Eigen::Matrix<double, 6, Eigen::Dynamic> s =
      Eigen::Matrix<double, 6, Eigen::Dynamic>::Zero(6, base_dofs());
  switch (base_mode) {
    case BaseMode::Spatial:
      s.setIdentity();
      break;
    case BaseMode::Planar:
      s(0, 0) = 1.0;
      s(1, 1) = 1.0;
      s(5, 2) = 1.0;
      break;
    case BaseMode::Fixed:
      break;
  }
  return s;
}

double RobotModel::reach(int limb) const {
  const LimbSpec& l = limbs.at(limb);
  double total = l.tip.norm();
  for (std::size_t k = 1; k < l.joints.size(); ++k) {
    total += links[l.joints[k]].offset.norm();
  }
  return total;
}

void RobotModel::finalize() {
  check_body(base, "base");
  const int n = dof();
  chains_.assign(n, {});
  limb_of_.assign(n, -1);
  for (int i = 0; i < n; ++i) {
    const LinkSpec& l = links[i];
    check_body(l.body, "link " + std::to_string(i));
    if (l.parent >= i || l.parent < -1) {
      throw ModelError("link " + std::to_string(i) +
                       ": parent must precede the link (acyclic tree)");
    }
    if (std::abs(l.axis.norm() - 1.0) > 1e-9) {
      throw ModelError("link " + std::to_string(i) + ": joint axis must be unit length");
    }
    if (!(l.lower < l.upper)) {
      throw ModelError("link " + std::to_string(i) + ": joint limits need lower < upper");
    }
    if (l.parent >= 0) chains_[i] = chains_[l.parent];
    chains_[i].push_back(i);
  }
  std::set<int> used;
  for (int k = 0; k < num_limbs(); ++k) {
    const LimbSpec& limb = limbs[k];
    if (limb.joints.empty()) throw ModelError("limb " + limb.name + " has no joints");
    for (std::size_t j = 0; j < limb.joints.size(); ++j) {
      const int idx = limb.joints[j];
      if (idx < 0 || idx >= n) throw ModelError("limb " + limb.name + ": joint index out of range");
      if (!used.insert(idx).second) {
        throw ModelError("limb " + limb.name + ": joint shared between limbs");
      }
      const int expected_parent = j == 0 ? -1 : limb.joints[j - 1];
      if (links[idx].parent != expected_parent) {
        throw ModelError("limb " + limb.name + ": joints must form a serial chain from the base");
      }
      limb_of_[idx] = k;
    }
  }
  if (base_mode == BaseMode::Planar) {
    for (const LinkSpec& l : links) {
      if (!(l.mount * l.axis).isApprox(Vec3::UnitZ(), 1e-12)) {
        throw ModelError("planar models need every joint axis along world z");
      }
    }
  }
}

SystemState SystemState::zero(const RobotModel& model) {
  SystemState s;
  s.joint_angles = VecX::Zero(model.dof());
  s.joint_rates = VecX::Zero(model.dof());
  return s;
}

double SystemState::planar_angle() const {
  const Mat3 r = base_orientation.toRotationMatrix();
  return std::atan2(r(1, 0), r(0, 0));
}

void SystemState::set_planar_angle(double angle) {
  base_orientation = Quat(Eigen::AngleAxisd(angle, Vec3::UnitZ()));
}

VecX SystemState::reduced_twist(const RobotModel& model) const {
  return model.base_selection().transpose() * base_twist;
}

void SystemState::set_reduced_twist(const RobotModel& model, const VecX& twist) {
  base_twist = model.base_selection() * twist;
}

VecX SystemState::limb_angles(const RobotModel& model, int limb) const {
  const auto& j = model.limbs.at(limb).joints;
  VecX q(j.size());
  for (std::size_t k = 0; k < j.size(); ++k) q[k] = joint_angles[j[k]];
  return q;
}

void SystemState::set_limb_angles(const RobotModel& model, int limb, const VecX& q) {
  const auto& j = model.limbs.at(limb).joints;
  for (std::size_t k = 0; k < j.size(); ++k) joint_angles[j[k]] = q[k];
}

VecX SystemState::limb_rates(const RobotModel& model, int limb) const {
  const auto& j = model.limbs.at(limb).joints;
  VecX q(j.size());
  for (std::size_t k = 0; k < j.size(); ++k) q[k] = joint_rates[j[k]];
  return q;
}

void SystemState::set_limb_rates(const RobotModel& model, int limb, const VecX& qd) {
  const auto& j = model.limbs.at(limb).joints;
  for (std::size_t k = 0; k < j.size(); ++k) joint_rates[j[k]] = qd[k];
}

void check_dimensions(const RobotModel& model, const SystemState& state) {
  if (state.joint_angles.size() != model.dof() || state.joint_rates.size() != model.dof()) {
    throw DimensionError("state has " + std::to_string(state.joint_angles.size()) +
                         " joint angles / " + std::to_string(state.joint_rates.size()) +
                         " rates but model " + model.name + " has " +
                         std::to_string(model.dof()) + " joints");
  }
}

std::vector<int> joint_limit_violations(const RobotModel& model, const VecX& q, double tol) {
  std::vector<int> bad;
  for (int i = 0; i < model.dof(); ++i) {
    if (q[i] < model.links[i].lower - tol || q[i] > model.links[i].upper + tol) bad.push_back(i);
  }
  return bad;
}

}  // namespace ramp
