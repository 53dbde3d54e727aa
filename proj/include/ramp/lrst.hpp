#pragma once

#include <cstdint>
#include <vector>

#include "ramp/kinematics.hpp"
#include "ramp/nelder_mead.hpp"
#include "ramp/trajectory.hpp"

namespace ramp {

/// Weights of the low-reaction swing objective
///   J1 = k1 * max ||dL/dt||
///   J2 = k2 * |h - max x_z| + k3 * |h - mean x_z|
/// The defaults are tuning values, not reproduction targets.
struct LrstWeights {
  double k1 = 1.0;
  double k2 = 10.0;
  double k3 = 10.0;
  double height = 0.04;      // target step height h, m
  int sample_count = 64;

  void validate() const;
};

struct ObjectiveValue {
  double j1 = 0.0;
  double j2 = 0.0;
  double total = 0.0;
  bool feasible = true;

  static ObjectiveValue infeasible() { return {kInf, kInf, kInf, false}; }
};

/// Per-sample data behind one objective evaluation, for inspection and tests.
struct ObjectiveTrace {
  std::vector<double> times;
  std::vector<Vec3> positions;
  std::vector<VecX> limb_angles;
  std::vector<VecX> limb_rates;
  std::vector<VecX> momentum;
  std::vector<VecX> momentum_rate;
  std::vector<double> heights;
};

/// Second-order finite-difference derivative on a uniform grid (central in
/// the interior, one-sided at the ends).
std::vector<VecX> grid_derivative(const std::vector<VecX>& values, double step);

/// Swing objective of a plan's path for the limb in plan.limb, with the base
/// and the supporting limbs held at `state`. Infeasible samples (IK failure
/// or joint-limit violation) give an infinite objective.
ObjectiveValue objective(const RobotModel& model, const SystemState& state, const SwingPlan& plan,
                         const LrstWeights& weights, ObjectiveTrace* trace = nullptr);

/// Geometry and timing of one swing.
struct SwingRequest {
  int limb = 0;
  Vec3 start_grasp = Vec3::Zero();
  Vec3 target_grasp = Vec3::Zero();
  Vec3 up = Vec3::UnitZ();
  double t_begin = 0.0;
  double t_end = 1.0;
  double release_height = 0.0;
  double grasp_height = 0.0;
  double release_fraction = 0.0;   // share of [t_begin, t_end] for the release
  double grasp_fraction = 0.0;

  double path_begin() const { return t_begin + release_fraction * (t_end - t_begin); }
  double path_end() const { return t_end - grasp_fraction * (t_end - t_begin); }
  Vec3 path_start() const { return start_grasp + release_height * up.normalized(); }
  Vec3 path_target() const { return target_grasp + grasp_height * up.normalized(); }
};

SwingPlan make_swing_plan(const SwingRequest& request, SwingPath path);

/// Baseline swing through a via point at the step height.
SwingPlan baseline_swing(const SwingRequest& request, double step_height);

struct OptimizerSettings {
  int starts = 8;
  NelderMeadOptions simplex{};
  std::uint64_t seed = 7;
};

struct OptimizedSwing {
  SwingPlan plan;
  ObjectiveValue value;
  int best_start = -1;
  std::vector<VecX> seeds;
  std::vector<ObjectiveValue> seed_values;
  std::vector<NelderMeadResult> runs;
};

/// Multi-start simplex search over the two free Bezier control points.
/// Throws InfeasibleTrajectory when every start ends infeasible.
OptimizedSwing optimize_swing(const RobotModel& model, const SystemState& state,
                              const SwingRequest& request, const LrstWeights& weights,
                              const OptimizerSettings& settings = {});

}  // namespace ramp
