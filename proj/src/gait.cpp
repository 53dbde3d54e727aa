#include "ramp/gait.hpp"

#include <algorithm>
#include <cmath>

namespace ramp {

std::string to_string(PlanMode mode) {
  switch (mode) {
    case PlanMode::BL: return "BL";
    case PlanMode::LRST: return "LRST";
    case PlanMode::PMD: return "PMD";
    case PlanMode::FMD: return "FMD";
  }
  return "?";
}

PlanMode parse_mode(const std::string& name) {
  if (name == "BL") return PlanMode::BL;
  if (name == "LRST") return PlanMode::LRST;
  if (name == "PMD") return PlanMode::PMD;
  if (name == "FMD") return PlanMode::FMD;
  throw ConfigError("mode", "unknown mode '" + name + "' (expected BL, LRST, PMD or FMD)");
}

double mode_alpha(PlanMode mode, double requested) {
  switch (mode) {
    case PlanMode::BL:
    case PlanMode::LRST: return 0.0;
    case PlanMode::PMD: return requested;
    case PlanMode::FMD: return 1.0;
  }
  return 0.0;
}

double phase_duration(const Phase& phase) {
  return std::visit([](const auto& p) { return p.duration; }, phase);
}

std::string phase_name(const Phase& phase) {
  struct Namer {
    std::string operator()(const Release& p) const { return "release(" + std::to_string(p.limb) + ")"; }
    std::string operator()(const SwingLeg& p) const { return "swing(" + std::to_string(p.limb) + ")"; }
    std::string operator()(const Grasp& p) const { return "grasp(" + std::to_string(p.limb) + ")"; }
    std::string operator()(const BaseShift&) const { return "base_shift"; }
  };
  return std::visit(Namer{}, phase);
}

double GaitSchedule::duration() const {
  double d = 0.0;
  for (const Phase& p : phases) d += phase_duration(p);
  return d;
}

void GaitSchedule::validate() const {
  for (std::size_t i = 0; i < phases.size(); ++i) {
    if (phase_duration(phases[i]) < 0.0) throw DomainError("phase " + std::to_string(i) + " has a negative duration");
    if (const auto* sw = std::get_if<SwingLeg>(&phases[i])) {
      const auto* rel = i > 0 ? std::get_if<Release>(&phases[i - 1]) : nullptr;
      const auto* gr = i + 1 < phases.size() ? std::get_if<Grasp>(&phases[i + 1]) : nullptr;
      if (!rel || !gr || rel->limb != sw->limb || gr->limb != sw->limb) {
        throw DomainError("swing phase " + std::to_string(i) +
                          " is not wrapped by a release and a grasp of the same limb");
      }
      if (!(sw->duration > 0.0)) throw DomainError("swing phase " + std::to_string(i) + " has no duration");
    } else if (std::holds_alternative<Release>(phases[i])) {
      if (i + 1 >= phases.size() || !std::holds_alternative<SwingLeg>(phases[i + 1])) {
        throw DomainError("release phase " + std::to_string(i) + " is not followed by a swing");
      }
    } else if (std::holds_alternative<Grasp>(phases[i])) {
      if (i == 0 || !std::holds_alternative<SwingLeg>(phases[i - 1])) {
        throw DomainError("grasp phase " + std::to_string(i) + " does not follow a swing");
      }
    }
  }
  if (std::abs(duration() - cycles * cycle_period) > 1e-9 * std::max(1.0, duration())) {
    throw DomainError("phase durations do not add up to the cycle period");
  }
}

std::vector<double> crawl_stagger(const CrawlParameters& params) {
  std::vector<double> out;
  for (std::size_t k = 0; k < params.order.size(); ++k) {
    out.push_back(static_cast<double>(k) * params.base_shift - 0.5 * params.stride);
  }
  return out;
}

GaitSchedule build_crawl_schedule(const CrawlParameters& p, const std::vector<Vec3>& grasps) {
  if (!(p.stride > 0.0 && p.step_height > 0.0 && p.swing_period > 0.0 && p.shift_duration >= 0.0 &&
        p.base_shift >= 0.0 && p.release_height >= 0.0 && p.grasp_height >= 0.0)) {
    throw DomainError("crawl lengths and durations must be positive");
  }
  if (p.release_fraction < 0.0 || p.grasp_fraction < 0.0 ||
      p.release_fraction + p.grasp_fraction >= 1.0) {
    throw DomainError("release and grasp fractions must leave time for the swing");
  }
  if (p.cycles < 1) throw DomainError("crawl needs at least one cycle");
  std::vector<int> order = p.order;
  if (order.empty()) {
    for (std::size_t i = 0; i < grasps.size(); ++i) order.push_back(static_cast<int>(i));
  }
  for (int limb : order) {
    if (limb < 0 || limb >= static_cast<int>(grasps.size())) throw DomainError("crawl order names an unknown limb");
  }
  const Vec3 dir = p.direction.normalized();
  GaitSchedule s;
  s.stride = p.stride;
  s.step_height = p.step_height;
  s.up = p.up.normalized();
  s.cycles = p.cycles;
  s.cycle_period = static_cast<double>(order.size()) * (p.swing_period + p.shift_duration);
  for (int c = 0; c < p.cycles; ++c) {
    for (int limb : order) {
      const Vec3 start = grasps[limb] + (c * p.stride) * dir;
      const double tr = p.release_fraction * p.swing_period;
      const double tg = p.grasp_fraction * p.swing_period;
      s.phases.push_back(Release{limb, p.release_height, tr});
      s.phases.push_back(SwingLeg{limb, start, start + p.stride * dir, p.swing_period - tr - tg});
      s.phases.push_back(Grasp{limb, p.grasp_height, tg});
      s.phases.push_back(BaseShift{p.base_shift * dir, p.shift_duration});
    }
  }
  s.validate();
  return s;
}

GaitSchedule build_single_step_schedule(int limb, const Vec3& start, const Vec3& target,
                                        double step_height, double duration, const Vec3& up) {
  if (!(duration > 0.0) || step_height < 0.0) throw DomainError("single step needs a positive duration");
  GaitSchedule s;
  s.stride = (target - start).norm();
  s.step_height = step_height;
  s.up = up.normalized();
  s.cycles = 1;
  s.cycle_period = duration;
  s.phases = {Release{limb, 0.0, 0.0}, SwingLeg{limb, start, target, duration}, Grasp{limb, 0.0, 0.0}};
  s.validate();
  return s;
}

namespace {

struct CachedSwing {
  int limb;
  Vec3 start, target, up;     // base frame
  Vec3 a3, a4;                // base frame
};

std::vector<double> group_times(double t0, double duration, int count) {
  std::vector<double> t(count);
  for (int k = 0; k < count; ++k) t[k] = t0 + duration * k / (count - 1);
  t.back() = t0 + duration;
  return t;
}

int sample_count(double duration, double step) {
  return std::max(2, static_cast<int>(std::lround(duration / step)) + 1);
}

Vec6 shift_twist(const Vec3& dp, const Vec3& rotvec, double sdot) {
  Vec6 v;
  v << dp * sdot, rotvec * sdot;
  return v;
}

class Assembler {
 public:
  Assembler(const RobotModel& model, const GaitSchedule& schedule, const PlanOptions& options,
            const SystemState& initial, int samples)
      : model_(model), schedule_(schedule), options_(options), samples_(samples) {
    state_ = initial;
    state_.joint_rates.setZero();
    state_.base_twist.setZero();
    const Kinematics kin = forward_kinematics(model, initial);
    anchors_ = kin.tip_positions;
    for (const Mat3& r : kin.tip_rotations) anchor_rot_.emplace_back(r);
    neutral_pos_ = initial.base_position;
    neutral_rot_ = initial.base_orientation;
    plan_.mode = options.mode;
    plan_.alpha = mode_alpha(options.mode, options.alpha);
    plan_.step = grid_step();
  }

  MotionPlan run() {
    double t = state_.time;
    std::size_t p = 0;
    while (p < schedule_.phases.size()) {
      const Phase& phase = schedule_.phases[p];
      const int consumed = std::holds_alternative<Release>(phase) ? 3 : 1;
      double span = 0.0;
      for (int k = 0; k < consumed; ++k) span += phase_duration(schedule_.phases[p + k]);
      try {
        if (std::holds_alternative<Release>(phase)) {
          swing_group(static_cast<int>(p), t, span);
        } else if (const auto* shift = std::get_if<BaseShift>(&phase)) {
          base_shift(static_cast<int>(p), t, *shift);
        }
      } catch (const SingularityError& e) {
        if (!fail("singularity", e.what(), static_cast<int>(p), std::isnan(e.time()) ? t : e.time())) throw;
        break;
      } catch (const PlanError&) {
        throw;
      } catch (const Error& e) {
        if (!fail("infeasible", e.what(), static_cast<int>(p), failing_time_ < 0 ? t : failing_time_)) throw;
        break;
      }
      t += span;
      p += consumed;
    }
    if (plan_.samples.empty()) push(state_, -1, -1, {});
    return std::move(plan_);
  }

 private:
  double grid_step() const {
    double group = 0.0;
    for (std::size_t p = 0; p < schedule_.phases.size(); ++p) {
      if (std::holds_alternative<Release>(schedule_.phases[p])) {
        group = phase_duration(schedule_.phases[p]) + phase_duration(schedule_.phases[p + 1]) +
                phase_duration(schedule_.phases[p + 2]);
        break;
      }
    }
    if (group <= 0.0) group = std::max(schedule_.duration(), 1.0);
    return group / (samples_ - 1);
  }

  bool fail(const std::string& kind, const std::string& what, int phase, double time) {
    if (!options_.allow_partial) throw PlanError(kind, what + " (phase " + std::to_string(phase) + ")", phase, time);
    plan_.failure = PlanFailure{kind, what, phase, time};
    return true;
  }

  std::vector<int> supports_without(int limb) const {
    std::vector<int> out;
    for (int i = 0; i < model_.num_limbs(); ++i) {
      if (i != limb) out.push_back(i);
    }
    return out;
  }

  void push(const SystemState& s, int phase, int swing_limb, const std::optional<Vec3>& swing_ref) {
    if (!plan_.samples.empty() && s.time <= plan_.samples.back().state.time) return;
    PlanSample ps;
    ps.state = s;
    ps.phase = phase;
    ps.end_effectors = anchors_;
    ps.attached.assign(model_.num_limbs(), true);
    if (swing_limb >= 0 && swing_ref) {
      ps.end_effectors[swing_limb] = *swing_ref;
      ps.attached[swing_limb] = false;
    }
    plan_.samples.push_back(std::move(ps));
  }

  SwingPlan plan_swing(const SwingRequest& req) {
    if (options_.mode == PlanMode::BL) {
      const SwingPlan sp = baseline_swing(req, schedule_.step_height);
      plan_.swing_objectives.push_back(objective(model_, state_, sp, options_.weights));
      return sp;
    }
    const Mat3 r = state_.base_orientation.toRotationMatrix();
    const Vec3 b = state_.base_position;
    const Vec3 rel_start = r.transpose() * (req.path_start() - b);
    const Vec3 rel_target = r.transpose() * (req.path_target() - b);
    const Vec3 rel_up = r.transpose() * req.up.normalized();
    for (const CachedSwing& c : cache_) {
      if (c.limb == req.limb && (c.start - rel_start).norm() < 1e-9 &&
          (c.target - rel_target).norm() < 1e-9 && (c.up - rel_up).norm() < 1e-9) {
        const SwingPlan sp = make_swing_plan(
            req, boundary_constrained_curve(req.path_start(), req.path_target(), req.path_begin(),
                                            req.path_end(), b + r * c.a3, b + r * c.a4));
        plan_.swing_objectives.push_back(objective(model_, state_, sp, options_.weights));
        return sp;
      }
    }
    LrstWeights w = options_.weights;
    w.height = schedule_.step_height;
    OptimizedSwing best = optimize_swing(model_, state_, req, w, options_.optimizer);
    const auto& curve = std::get<BezierCurve>(best.plan.path);
    cache_.push_back({req.limb, rel_start, rel_target, rel_up, r.transpose() * (curve.points[3] - b),
                      r.transpose() * (curve.points[4] - b)});
    plan_.swing_objectives.push_back(best.value);
    return best.plan;
  }

  void swing_group(int p, double t0, double span) {
    const auto& rel = std::get<Release>(schedule_.phases[p]);
    const auto& sw = std::get<SwingLeg>(schedule_.phases[p + 1]);
    const auto& gr = std::get<Grasp>(schedule_.phases[p + 2]);
    const int limb = sw.limb;
    if ((anchors_[limb] - sw.start_grasp).norm() > 1e-6) {
      throw InfeasibleTrajectory("swing of limb " + model_.limbs[limb].name +
                                 " does not start at its current grasp point");
    }
    SwingRequest req;
    req.limb = limb;
    req.start_grasp = anchors_[limb];
    req.target_grasp = sw.target_grasp;
    req.up = schedule_.up;
    req.t_begin = t0;
    req.t_end = t0 + span;
    req.release_height = rel.height;
    req.grasp_height = gr.height;
    req.release_fraction = rel.duration / span;
    req.grasp_fraction = gr.duration / span;
    failing_time_ = t0;
    const SwingPlan sp = plan_swing(req);
    plan_.swings.push_back(sp);

    const int n = sample_count(span, plan_.step);
    const std::vector<double> times = group_times(t0, span, n);
    const double alpha = plan_.alpha;
    std::vector<SystemState> states;
    if (options_.mode == PlanMode::PMD || options_.mode == PlanMode::FMD) {
      DistributionOptions dopt = options_.distribution;
      dopt.samples = n;
      std::vector<SystemState> partial;
      try {
        states = distribute_over_plan(model_, state_, sp, supports_without(limb),
                                      DistributionFactor(alpha), dopt, &partial);
      } catch (const Error&) {
        for (std::size_t k = 0; k < partial.size(); ++k) {
          const bool inside = k > 0;
          push(partial[k], p + (k == 0 ? 0 : 1), inside ? limb : -1,
               inside ? std::optional<Vec3>(sp.evaluate(partial[k].time).position) : std::nullopt);
        }
        throw;
      }
    } else {
      SystemState s = state_;
      for (int k = 0; k < n; ++k) {
        s.time = times[k];
        failing_time_ = s.time;
        const CurvePoint ref = sp.evaluate(s.time);
        s.set_limb_angles(model_, limb,
                          inverse_kinematics(model_, limb, {ref.position, std::nullopt}, s.base_position,
                                             s.base_orientation, s.limb_angles(model_, limb)));
        const LimbJacobian j = jacobians(model_, s, limb, Task::Position);
        const std::vector<int> rows = task_rows(model_, Task::Position);
        VecX xe(static_cast<int>(rows.size()));
        for (std::size_t r = 0; r < rows.size(); ++r) xe[r] = ref.velocity[rows[r]];
        s.joint_rates.setZero();
        s.set_limb_rates(model_, limb, j.manip_pinv * xe);
        states.push_back(s);
      }
    }
    for (int k = 0; k < n; ++k) {
      const bool inside = k > 0 && k < n - 1;
      const int phase = k == 0 ? p : (k == n - 1 ? p + 2 : p + 1);
      if (k == n - 1) anchors_[limb] = sw.target_grasp;
      push(states[k], phase, inside ? limb : -1,
           inside ? std::optional<Vec3>(sp.evaluate(states[k].time).position) : std::nullopt);
    }
    anchor_rot_[limb] = Quat(forward_kinematics(model_, states.back()).tip_rotations[limb]);
    state_ = states.back();
    state_.base_twist.setZero();
    state_.joint_rates.setZero();
    failing_time_ = -1.0;
  }

  void base_shift(int p, double t0, const BaseShift& shift) {
    cumulative_ += shift.displacement;
    if (shift.duration <= 0.0) return;
    const Vec3 p0 = state_.base_position;
    const Quat q0 = state_.base_orientation;
    const Vec3 p1 = neutral_pos_ + cumulative_;
    const Quat q1 = neutral_rot_;
    const Eigen::AngleAxisd delta(q1 * q0.conjugate());
    const Vec3 rotvec = delta.angle() * delta.axis();
    const int n = sample_count(shift.duration, plan_.step);
    const std::vector<double> times = group_times(t0, shift.duration, n);
    const bool clamp = support_task(model_) == Task::Pose;
    std::vector<int> all;
    for (int i = 0; i < model_.num_limbs(); ++i) all.push_back(i);

    SystemState s = state_;
    for (int k = 0; k < n; ++k) {
      const double tau = (times[k] - t0) / shift.duration;
      const double sv = k == n - 1 ? 1.0 : tau * tau * tau * (10.0 - 15.0 * tau + 6.0 * tau * tau);
      const double sdot =
          30.0 * tau * tau * (1.0 - tau) * (1.0 - tau) / shift.duration;
      s.time = times[k];
      failing_time_ = s.time;
      if (k == n - 1) {
        s.base_position = p1;
        s.base_orientation = q1;
      } else {
        s.base_position = p0 + sv * (p1 - p0);
        s.base_orientation = q0.slerp(sv, q1).normalized();
      }
      for (int i : all) {
        IkTarget target{anchors_[i], clamp ? std::optional<Quat>(anchor_rot_[i]) : std::nullopt};
        try {
          s.set_limb_angles(model_, i,
                            inverse_kinematics(model_, i, target, s.base_position, s.base_orientation,
                                               s.limb_angles(model_, i)));
        } catch (const UnreachableTarget& e) {
          throw SingularityError(std::string("support limb pushed out of its workspace: ") + e.what(), 0.0,
                                 s.time);
        }
      }
      const Vec6 twist = shift_twist(p1 - p0, rotvec, sdot);
      const VecX reduced = model_.base_selection().transpose() * twist;
      s.set_reduced_twist(model_, reduced);
      s.joint_rates = support_rates(model_, s, all, reduced, options_.distribution);
      push(s, p, -1, std::nullopt);
    }
    state_ = s;
    state_.base_twist.setZero();
    state_.joint_rates.setZero();
    failing_time_ = -1.0;
  }

  const RobotModel& model_;
  const GaitSchedule& schedule_;
  const PlanOptions& options_;
  int samples_;
  SystemState state_;
  std::vector<Vec3> anchors_;
  std::vector<Quat> anchor_rot_;
  Vec3 neutral_pos_;
  Quat neutral_rot_;
  Vec3 cumulative_ = Vec3::Zero();
  std::vector<CachedSwing> cache_;
  double failing_time_ = -1.0;
  MotionPlan plan_;
};

}  // namespace

MotionPlan assemble_plan(const RobotModel& model, const GaitSchedule& schedule,
                         const PlanOptions& options, const SystemState& initial, int samples_per_swing) {
  check_dimensions(model, initial);
  schedule.validate();
  if (samples_per_swing < 2) throw DomainError("plan grid needs at least two samples per swing");
  if (options.mode == PlanMode::PMD) DistributionFactor(options.alpha);
  if (model.base_dofs() == 0 && (options.mode == PlanMode::PMD || options.mode == PlanMode::FMD)) {
    throw ModelError("momentum distribution needs a floating base");
  }
  return Assembler(model, schedule, options, initial, samples_per_swing).run();
}

JointReference reference_at(const MotionPlan& plan, double t) {
  const auto& s = plan.samples;
  if (s.empty()) throw DomainError("empty plan");
  JointReference out;
  if (t <= s.front().state.time || s.size() == 1) {
    out.angles = s.front().state.joint_angles;
    out.rates = t < s.front().state.time ? VecX::Zero(out.angles.size()) : s.front().state.joint_rates;
    out.sample = 0;
    return out;
  }
  if (t >= s.back().state.time) {
    out.angles = s.back().state.joint_angles;
    out.rates = t > s.back().state.time ? VecX::Zero(out.angles.size()) : s.back().state.joint_rates;
    out.sample = static_cast<int>(s.size()) - 1;
    return out;
  }
  const auto it = std::upper_bound(s.begin(), s.end(), t,
                                   [](double v, const PlanSample& p) { return v < p.state.time; });
  const std::size_t k = static_cast<std::size_t>(it - s.begin()) - 1;
  const SystemState& a = s[k].state;
  const SystemState& b = s[k + 1].state;
  const double h = b.time - a.time;
  const double u = (t - a.time) / h;
  const double h00 = 2 * u * u * u - 3 * u * u + 1, h10 = u * u * u - 2 * u * u + u;
  const double h01 = -2 * u * u * u + 3 * u * u, h11 = u * u * u - u * u;
  const double d00 = (6 * u * u - 6 * u) / h, d10 = 3 * u * u - 4 * u + 1;
  const double d01 = (-6 * u * u + 6 * u) / h, d11 = 3 * u * u - 2 * u;
  out.angles = h00 * a.joint_angles + h10 * h * a.joint_rates + h01 * b.joint_angles + h11 * h * b.joint_rates;
  out.rates = d00 * a.joint_angles + d10 * a.joint_rates + d01 * b.joint_angles + d11 * b.joint_rates;
  out.sample = static_cast<int>(k);
  return out;
}

}  // namespace ramp
