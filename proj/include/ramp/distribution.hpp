#pragma once

#include <vector>

#include "ramp/kinematics.hpp"
#include "ramp/trajectory.hpp"

namespace ramp {

/// Share of the swing momentum absorbed by the base and supporting limbs.
class DistributionFactor {
 public:
  explicit DistributionFactor(double alpha);
  double value() const { return alpha_; }

 private:
  double alpha_;
};

struct DistributionOptions {
  double singularity_threshold = 1e-4;   // smallest singular value, SI units
  int samples = 64;
};

struct EffectiveBaseInertia {
  MatX matrix;            // H_b - sum_sup H_bm,i J_mi^+ J_b,i
  double sigma_min = 0.0;
};

/// Inertia seen by the base when every supporting end-effector is held still.
EffectiveBaseInertia effective_inertia(const RobotModel& model, const SystemState& state,
                                       const std::vector<int>& support_set);

/// Base twist (reduced) that compensates alpha of the swing momentum carried
/// by the state's joint rates. Throws SingularityError when H_eff or a
/// support Jacobian is below the threshold.
VecX base_velocity(const RobotModel& model, const SystemState& state,
                   const std::vector<int>& swing_set, DistributionFactor alpha,
                   const DistributionOptions& options = {});

/// Joint rates (full n-vector, zero outside the support set) that keep every
/// supporting end-effector still while the base moves with `base_twist`.
VecX support_rates(const RobotModel& model, const SystemState& state,
                   const std::vector<int>& support_set, const VecX& base_twist,
                   const DistributionOptions& options = {});

/// Base trajectory for one swing: the swing tip follows `plan` in the world
/// frame, supports stay on their anchors and the base absorbs alpha of the
/// swing momentum. Each sample carries pose, joint angles, base twist and
/// joint rates. Singularities are rethrown with the sample time attached;
/// when `resolved` is given it receives every sample finished before the
/// failure.
std::vector<SystemState> distribute_over_plan(const RobotModel& model, const SystemState& initial,
                                              const SwingPlan& plan,
                                              const std::vector<int>& support_set,
                                              DistributionFactor alpha,
                                              const DistributionOptions& options = {},
                                              std::vector<SystemState>* resolved = nullptr);

/// Pose after moving for `dt` with a constant spatial twist (position
/// Euler step, orientation through the exponential map).
void integrate_pose(Vec3& position, Quat& orientation, const Vec6& twist, double dt);

}  // namespace ramp
