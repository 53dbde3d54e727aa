#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ramp/distribution.hpp"
#include "ramp/lrst.hpp"

namespace ramp {

/// Planning variants compared in the studies.
///   BL:   via-point swing, base held still
///   LRST: optimized swing, base held still
///   PMD:  optimized swing, base absorbs a fraction alpha of the swing momentum
///   FMD:  optimized swing, base absorbs all of it
enum class PlanMode { BL, LRST, PMD, FMD };

std::string to_string(PlanMode mode);
PlanMode parse_mode(const std::string& name);   // throws ConfigError

/// Distribution factor a mode runs with (PMD keeps the requested value).
double mode_alpha(PlanMode mode, double requested);

struct Release {
  int limb = 0;
  double height = 0.0;     // m along the surface normal
  double duration = 0.0;   // s
};

struct SwingLeg {
  int limb = 0;
  Vec3 start_grasp = Vec3::Zero();
  Vec3 target_grasp = Vec3::Zero();
  double duration = 0.0;   // s, path part only
};

struct Grasp {
  int limb = 0;
  double height = 0.0;
  double duration = 0.0;
};

struct BaseShift {
  Vec3 displacement = Vec3::Zero();
  double duration = 0.0;
};

using Phase = std::variant<Release, SwingLeg, Grasp, BaseShift>;

double phase_duration(const Phase& phase);
std::string phase_name(const Phase& phase);

struct GaitSchedule {
  std::vector<Phase> phases;
  double cycle_period = 0.0;
  int cycles = 1;
  double stride = 0.0;
  double step_height = 0.0;
  Vec3 up = Vec3::UnitZ();

  double duration() const;

  /// Throws DomainError when a swing is not wrapped by Release/Grasp of the
  /// same limb or the phases do not fill cycles * cycle_period.
  void validate() const;
};

struct CrawlParameters {
  double stride = 0.08;
  double step_height = 0.04;
  double swing_period = 1.5;     // release + swing + grasp
  double base_shift = 0.02;
  double shift_duration = 1.5;
  double release_height = 0.01;
  double grasp_height = 0.01;
  double release_fraction = 0.1;
  double grasp_fraction = 0.1;
  int cycles = 5;
  std::vector<int> order;        // swing order, default 0..n-1
  Vec3 direction = Vec3::UnitX();
  Vec3 up = Vec3::UnitZ();
};

/// Crawl gait: each limb in `order` swings by one stride, each swing
/// followed by a base shift. `grasps` are the initial grasp points.
GaitSchedule build_crawl_schedule(const CrawlParameters& params, const std::vector<Vec3>& grasps);

/// One swing of one limb from start to target with zero-length release and
/// grasp phases.
GaitSchedule build_single_step_schedule(int limb, const Vec3& start, const Vec3& target,
                                        double step_height, double duration, const Vec3& up);

/// Crawl-gait stance offsets along the walking direction that make the
/// gait periodic: the k-th limb in swing order starts k * shift - stride / 2
/// from its neutral point.
std::vector<double> crawl_stagger(const CrawlParameters& params);

struct PlanOptions {
  PlanMode mode = PlanMode::BL;
  double alpha = 0.0;                   // used by PMD only
  LrstWeights weights{};
  OptimizerSettings optimizer{};
  DistributionOptions distribution{};
  bool allow_partial = true;            // keep the plan up to a failure
};

/// Raised by plan assembly; carries the failing phase and time.
class PlanError : public Error {
 public:
  PlanError(const std::string& kind, const std::string& what, int phase, double time)
      : Error(what), kind_(kind), phase_(phase), time_(time) {}
  const std::string& kind() const { return kind_; }
  int phase() const { return phase_; }
  double time() const { return time_; }

 private:
  std::string kind_;
  int phase_;
  double time_;
};

struct PlanFailure {
  std::string kind;       // "singularity" or "infeasible"
  std::string message;
  int phase = -1;
  double time = 0.0;
};

struct PlanSample {
  SystemState state;                 // references: pose, twist, joint angles and rates
  std::vector<Vec3> end_effectors;   // reference x_e per limb
  std::vector<bool> attached;        // contact schedule
  int phase = -1;
};

struct MotionPlan {
  PlanMode mode = PlanMode::BL;
  double alpha = 0.0;
  double step = 0.0;                 // grid spacing, s
  std::vector<PlanSample> samples;
  std::vector<SwingPlan> swings;
  std::vector<ObjectiveValue> swing_objectives;
  std::optional<PlanFailure> failure;

  double start_time() const { return samples.front().state.time; }
  double end_time() const { return samples.back().state.time; }
  bool complete() const { return !failure.has_value(); }
};

/// Time-sampled references for every end-effector, the base and the joints.
MotionPlan assemble_plan(const RobotModel& model, const GaitSchedule& schedule,
                         const PlanOptions& options, const SystemState& initial,
                         int samples_per_swing = 64);

struct JointReference {
  VecX angles;
  VecX rates;
  int sample = 0;                    // index of the sample at or before t
};

/// Cubic Hermite interpolation of the joint references at time t (clamped
/// to the plan window).
JointReference reference_at(const MotionPlan& plan, double t);

}  // namespace ramp
