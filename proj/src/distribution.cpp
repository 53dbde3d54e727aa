#include "ramp/distribution.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace ramp {

DistributionFactor::DistributionFactor(double alpha) : alpha_(alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw DomainError("distribution factor must lie in [0, 1], got " + std::to_string(alpha));
  }
}

namespace {

double smallest_singular_value(const MatX& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<MatX> svd(m);
  return svd.singularValues().minCoeff();
}

std::vector<int> complement(const RobotModel& model, const std::vector<int>& set) {
  std::vector<int> out;
  for (int i = 0; i < model.num_limbs(); ++i) {
    if (std::find(set.begin(), set.end(), i) == set.end()) out.push_back(i);
  }
  return out;
}

void require_floating(const RobotModel& model) {
  if (model.base_dofs() == 0) throw ModelError("momentum distribution needs a floating base");
}

// Solve A x = b directly when well conditioned, otherwise with damped least
// squares.
VecX solve_base(const MatX& a, const VecX& b) {
  Eigen::JacobiSVD<MatX> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  if (s.minCoeff() > 1e-10 * s.maxCoeff()) return Eigen::PartialPivLU<MatX>(a).solve(b);
  const double l2 = 1e-12;
  VecX x = VecX::Zero(a.cols());
  const VecX utb = svd.matrixU().transpose() * b;
  for (int i = 0; i < s.size(); ++i) {
    x += svd.matrixV().col(i) * (s[i] * utb[i] / (s[i] * s[i] + l2));
  }
  return x;
}

struct SupportTerms {
  MatX h_eff;
  std::vector<LimbJacobian> jac;   // per support, in support_set order
};

SupportTerms support_terms(const RobotModel& model, const Kinematics& kin, const InertiaSet& in,
                           const std::vector<int>& support_set, double threshold,
                           bool check) {
  SupportTerms t;
  t.h_eff = in.base;
  const Task task = support_task(model);
  for (int i : support_set) {
    LimbJacobian j = jacobians(model, kin, i, task);
    if (check && j.sigma_min < threshold) {
      throw SingularityError("support limb " + model.limbs[i].name + " is singular (sigma_min " +
                                 std::to_string(j.sigma_min) + ")",
                             j.sigma_min);
    }
    t.h_eff -= in.coupling[i] * j.manip_pinv * j.base;
    t.jac.push_back(std::move(j));
  }
  return t;
}

}  // namespace

EffectiveBaseInertia effective_inertia(const RobotModel& model, const SystemState& state,
                                       const std::vector<int>& support_set) {
  require_floating(model);
  const Kinematics kin = forward_kinematics(model, state);
  const InertiaSet in = inertia_matrices(model, kin);
  EffectiveBaseInertia out;
  out.matrix = support_terms(model, kin, in, support_set, 0.0, false).h_eff;
  out.sigma_min = smallest_singular_value(out.matrix);
  return out;
}

VecX base_velocity(const RobotModel& model, const SystemState& state,
                   const std::vector<int>& swing_set, DistributionFactor alpha,
                   const DistributionOptions& options) {
  require_floating(model);
  const Kinematics kin = forward_kinematics(model, state);
  const InertiaSet in = inertia_matrices(model, kin);
  const std::vector<int> supports = complement(model, swing_set);
  const SupportTerms t = support_terms(model, kin, in, supports, options.singularity_threshold, true);
  const double sigma = smallest_singular_value(t.h_eff);
  if (sigma < options.singularity_threshold) {
    throw SingularityError("effective base inertia is singular (sigma_min " +
                               std::to_string(sigma) + ")",
                           sigma);
  }
  VecX swing = VecX::Zero(in.base.rows());
  for (int j : swing_set) swing += in.coupling[j] * state.limb_rates(model, j);
  if (alpha.value() == 0.0 || swing.isZero(0.0)) return VecX::Zero(model.base_dofs());
  return solve_base(t.h_eff, -alpha.value() * swing);
}

VecX support_rates(const RobotModel& model, const SystemState& state,
                   const std::vector<int>& support_set, const VecX& base_twist,
                   const DistributionOptions& options) {
  require_floating(model);
  if (base_twist.size() != model.base_dofs()) throw DimensionError("base twist size mismatch");
  const Kinematics kin = forward_kinematics(model, state);
  VecX rates = VecX::Zero(model.dof());
  const Task task = support_task(model);
  for (int i : support_set) {
    const LimbJacobian j = jacobians(model, kin, i, task);
    if (j.sigma_min < options.singularity_threshold) {
      throw SingularityError("support limb " + model.limbs[i].name + " is singular (sigma_min " +
                                 std::to_string(j.sigma_min) + ")",
                             j.sigma_min);
    }
    const VecX qd = -j.manip_pinv * (j.base * base_twist);
    const auto& joints = model.limbs[i].joints;
    for (std::size_t k = 0; k < joints.size(); ++k) rates[joints[k]] = qd[k];
  }
  return rates;
}

void integrate_pose(Vec3& position, Quat& orientation, const Vec6& twist, double dt) {
  position += twist.head<3>() * dt;
  const Vec3 rot = twist.tail<3>() * dt;
  const double angle = rot.norm();
  if (angle == 0.0) return;
  orientation = (Quat(Eigen::AngleAxisd(angle, rot / angle)) * orientation).normalized();
}

namespace {

struct Anchor {
  int limb;
  Vec3 position;
  Quat orientation;
};

// Places every limb for the given base pose and solves the rates of the
// coupled swing / base system at time t.
SystemState resolve_sample(const RobotModel& model, const SystemState& guess, const SwingPlan& plan,
                           const std::vector<Anchor>& anchors, double alpha, double t,
                           double threshold) {
  SystemState s = guess;
  s.time = t;
  const bool clamp = support_task(model) == Task::Pose;
  for (const Anchor& a : anchors) {
    IkTarget target{a.position, clamp ? std::optional<Quat>(a.orientation) : std::nullopt};
    try {
      s.set_limb_angles(model, a.limb,
                        inverse_kinematics(model, a.limb, target, s.base_position,
                                           s.base_orientation, s.limb_angles(model, a.limb)));
    } catch (const UnreachableTarget& e) {
      // the anchor left the limb workspace: the limb passed its singular boundary
      throw SingularityError(std::string("support limb pushed out of its workspace: ") + e.what(),
                             0.0, t);
    }
  }
  const CurvePoint ref = plan.evaluate(t);
  try {
    s.set_limb_angles(model, plan.limb,
                      inverse_kinematics(model, plan.limb, {ref.position, std::nullopt},
                                         s.base_position, s.base_orientation,
                                         s.limb_angles(model, plan.limb)));
  } catch (const UnreachableTarget& e) {
    throw InfeasibleTrajectory(std::string("swing tip unreachable at t = ") + std::to_string(t) +
                               ": " + e.what());
  }

  const Kinematics kin = forward_kinematics(model, s);
  const InertiaSet in = inertia_matrices(model, kin);
  std::vector<int> supports;
  for (const Anchor& a : anchors) supports.push_back(a.limb);
  const SupportTerms terms = support_terms(model, kin, in, supports, threshold, true);
  const double sigma = smallest_singular_value(terms.h_eff);
  if (sigma < threshold) {
    throw SingularityError("effective base inertia is singular", sigma, t);
  }

  const LimbJacobian sw = jacobians(model, kin, plan.limb, Task::Position);
  const std::vector<int> rows = task_rows(model, Task::Position);
  VecX xe(static_cast<int>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) xe[r] = ref.velocity[rows[r]];

  const MatX& hsw = in.coupling[plan.limb];
  VecX twist = VecX::Zero(model.base_dofs());
  if (alpha != 0.0) {
    const MatX coupled = terms.h_eff - alpha * hsw * sw.manip_pinv * sw.base;
    const double sc = smallest_singular_value(coupled);
    if (sc < threshold) throw SingularityError("coupled base/swing system is singular", sc, t);
    twist = solve_base(coupled, -alpha * hsw * sw.manip_pinv * xe);
  }
  s.set_reduced_twist(model, twist);
  s.joint_rates.setZero();
  s.set_limb_rates(model, plan.limb, sw.manip_pinv * (xe - sw.base * twist));
  for (std::size_t k = 0; k < supports.size(); ++k) {
    const LimbJacobian& j = terms.jac[k];
    s.set_limb_rates(model, supports[k], -j.manip_pinv * (j.base * twist));
  }
  return s;
}

}  // namespace

std::vector<SystemState> distribute_over_plan(const RobotModel& model, const SystemState& initial,
                                              const SwingPlan& plan,
                                              const std::vector<int>& support_set,
                                              DistributionFactor alpha,
                                              const DistributionOptions& options,
                                              std::vector<SystemState>* resolved) {
  require_floating(model);
  check_dimensions(model, initial);
  if (options.samples < 2) throw DomainError("distribution grid needs at least two samples");
  const int n = options.samples;
  const double dt = (plan.t_end - plan.t_begin) / (n - 1);

  const Kinematics kin0 = forward_kinematics(model, initial);
  std::vector<Anchor> anchors;
  for (int i : support_set) {
    if (i == plan.limb) throw DomainError("swing limb cannot be in the support set");
    anchors.push_back({i, kin0.tip_positions[i], Quat(kin0.tip_rotations[i])});
  }

  std::vector<SystemState> local;
  std::vector<SystemState>& out = resolved ? *resolved : local;
  out.clear();
  out.reserve(n);
  SystemState current = initial;
  for (int k = 0; k < n; ++k) {
    const double t = k == n - 1 ? plan.t_end : plan.t_begin + k * dt;
    try {
      current = resolve_sample(model, current, plan, anchors, alpha.value(), t,
                               options.singularity_threshold);
    } catch (const SingularityError& e) {
      throw SingularityError(e.what(), e.sigma_min(), t);
    }
    out.push_back(current);
    if (k == n - 1) break;

    // trapezoidal step: predict with the current twist, correct with the mean
    const double t_next = k + 1 == n - 1 ? plan.t_end : plan.t_begin + (k + 1) * dt;
    const double h = t_next - t;
    SystemState predicted = current;
    integrate_pose(predicted.base_position, predicted.base_orientation, current.base_twist, h);
    try {
      predicted = resolve_sample(model, predicted, plan, anchors, alpha.value(), t_next,
                                 options.singularity_threshold);
    } catch (const SingularityError& e) {
      throw SingularityError(e.what(), e.sigma_min(), t_next);
    }
    const Vec6 mean = 0.5 * (current.base_twist + predicted.base_twist);
    SystemState next = predicted;
    next.base_position = current.base_position;
    next.base_orientation = current.base_orientation;
    integrate_pose(next.base_position, next.base_orientation, mean, h);
    current = next;
  }
  return out;
}

}  // namespace ramp
