#include <algorithm>
#include <cmath>

#include "ramp/simdyn.hpp"

namespace ramp {

void ContactParameters::validate() const {
  if (!(stiffness > 0.0)) throw ConfigError("contact.stiffness", "must be positive");
  if (damping < 0.0) throw ConfigError("contact.damping", "must be non-negative");
  if (!(holding_force > 0.0)) throw ConfigError("contact.holding_force", "must be positive");
  if (rot_stiffness < 0.0 || rot_damping < 0.0) {
    throw ConfigError("contact.rotational", "must be non-negative");
  }
  if (std::abs(normal.norm() - 1.0) > 1e-9) throw ConfigError("contact.normal", "must be a unit vector");
}

Vec3 contact_force(const ContactPoint& c, const Vec3& p, const Vec3& v) {
  return -c.params.stiffness * (p - c.anchor) - c.params.damping * v;
}

Vec3 contact_moment(const ContactPoint& c, const Mat3& r, const Vec3& w) {
  if (!c.clamp) return Vec3::Zero();
  const Eigen::AngleAxisd err(r * c.anchor_rotation.toRotationMatrix().transpose());
  return -c.params.rot_stiffness * err.angle() * err.axis() - c.params.rot_damping * w;
}

double tensile_component(const ContactPoint& c, const Vec3& force) {
  return std::max(0.0, -force.dot(c.params.normal));
}

Detachment detachment_check(const ContactPoint& c, const Vec3& force) {
  return tensile_component(c, force) > c.params.holding_force ? Detachment::Detaches : Detachment::Holds;
}

VecX pd_torques(const MotionPlan& plan, const SystemState& state, double t, const PdGains& gains) {
  const JointReference ref = reference_at(plan, t);
  if (gains.kp.size() != state.joint_angles.size() || gains.kd.size() != state.joint_angles.size()) {
    throw DimensionError("PD gains do not match the joint count");
  }
  return gains.kp.cwiseProduct(ref.angles - state.joint_angles) +
         gains.kd.cwiseProduct(ref.rates - state.joint_rates);
}

double SimConfig::stable_timestep(const RobotModel& model, const ContactParameters& contact) {
  double m_min = model.base.mass;
  for (const LinkSpec& l : model.links) m_min = std::min(m_min, l.body.mass);
  return 1.0 / (20.0 * std::sqrt(contact.stiffness / m_min));
}

void SimConfig::validate(const RobotModel& model) const {
  contact.validate();
  if (!(timestep > 0.0)) throw ConfigError("sim.timestep", "must be positive");
  const double bound = stable_timestep(model, contact);
  if (timestep > bound) {
    throw ConfigError("sim.timestep", "timestep " + std::to_string(timestep) +
                                          " s exceeds the contact stability bound " +
                                          std::to_string(bound) + " s");
  }
  if (!(duration > 0.0)) throw ConfigError("sim.duration", "must be positive");
  if (gains.kp.size() != model.dof() || gains.kd.size() != model.dof()) {
    throw ConfigError("sim.gains", "need one kp and kd per joint");
  }
  if ((gains.kp.array() < 0.0).any() || (gains.kd.array() < 0.0).any()) {
    throw ConfigError("sim.gains", "must be non-negative");
  }
  if (float_time < 0.0) throw ConfigError("sim.float_time", "must be non-negative");
  if (!(log_interval > 0.0)) throw ConfigError("sim.log_interval", "must be positive");
}

std::string to_string(Termination cause) {
  switch (cause) {
    case Termination::GoalReached: return "goal_reached";
    case Termination::DetachedFloating: return "detached_floating";
    case Termination::Singularity: return "singularity";
    case Termination::TimeOut: return "time_out";
    case Termination::NumericalBlowup: return "numerical_blowup";
  }
  return "?";
}

namespace {

bool planned_attached(const MotionPlan& plan, int sample, double t, int limb) {
  const auto& s = plan.samples;
  if (sample + 1 >= static_cast<int>(s.size()) || t < s.front().state.time) {
    return s[std::min<std::size_t>(sample, s.size() - 1)].attached[limb];
  }
  return s[sample].attached[limb] && s[sample + 1].attached[limb];
}

class Runner {
 public:
  Runner(const RobotModel& model, const MotionPlan& plan, const SimConfig& config)
      : model_(model), plan_(plan), config_(config) {}

  SimLog run() {
    SystemState s = plan_.samples.front().state;
    s.base_twist.setZero();
    s.joint_rates.setZero();
    const Kinematics kin0 = forward_kinematics(model_, s);
    for (int i = 0; i < model_.num_limbs(); ++i) {
      ContactPoint c;
      c.limb = i;
      c.attached = plan_.samples.front().attached[i];
      c.anchor = kin0.tip_positions[i];
      c.anchor_rotation = Quat(kin0.tip_rotations[i]);
      c.clamp = model_.contact_kind == ContactKind::Clamp;
      c.params = config_.contact;
      contacts_.push_back(c);
      lost_.push_back(false);
    }
    start_ = s.base_position;
    const double dt = config_.timestep;
    const long log_every = std::max(1L, std::lround(config_.log_interval / dt));
    const double plan_end = plan_.end_time();
    const double t0 = s.time;
    double detached_at = -1.0;
    log(s);

    for (long k = 1;; ++k) {
      const double t = s.time;
      const JointReference ref = reference_at(plan_, t);
      for (auto& c : contacts_) {
        const bool want = planned_attached(plan_, ref.sample, t, c.limb);
        if (c.attached && !want) {
          c.attached = false;
          log_.events.push_back({t, "release", c.limb, 0.0, "planned"});
        } else if (!c.attached && want && !lost_[c.limb]) {
          const Kinematics kin = forward_kinematics(model_, s);
          c.attached = true;
          c.anchor = kin.tip_positions[c.limb];
          c.anchor_rotation = Quat(kin.tip_rotations[c.limb]);
          log_.events.push_back({t, "grasp", c.limb, 0.0, "touchdown"});
        }
      }
      const VecX tau = config_.gains.kp.cwiseProduct(ref.angles - s.joint_angles) +
                       config_.gains.kd.cwiseProduct(ref.rates - s.joint_rates);
      try {
        s = step(model_, s, tau, contacts_, config_.gravity, dt);
        s.time = t0 + k * dt;
      } catch (const NumericalBlowup& e) {
        log_.events.push_back({t, "numerical_blowup", -1, 0.0, e.what()});
        return finish(Termination::NumericalBlowup, t);
      }

      const std::vector<ContactWrench> w = contact_wrenches(model_, s, contacts_);
      bool forced = false;
      std::vector<int> detaching;
      for (std::size_t c = 0; c < contacts_.size(); ++c) {
        if (contacts_[c].attached && detachment_check(contacts_[c], w[c].force) == Detachment::Detaches) {
          detaching.push_back(static_cast<int>(c));
          forced = true;
        }
      }
      if (forced || k % log_every == 0) log(s, &w);
      for (int c : detaching) {
        const double tensile = tensile_component(contacts_[c], w[c].force);
        log_.events.push_back({s.time, "detachment", c, tensile, "unplanned"});
        contacts_[c].attached = false;
        lost_[c] = true;
        ++log_.unplanned_detachments;
        if (detached_at < 0.0) detached_at = s.time;
      }

      if (detached_at >= 0.0) {
        if (s.time >= detached_at + config_.float_time - 0.5 * dt) return finish(Termination::DetachedFloating, s.time, s);
        continue;
      }
      if (s.time >= plan_end - 0.5 * dt) {
        if (plan_.failure) {
          log_.events.push_back({plan_.failure->time, "singularity", -1, 0.0, plan_.failure->message});
          return finish(Termination::Singularity, s.time, s);
        }
        const double travel = (s.base_position - start_).dot(config_.goal_direction.normalized());
        if (travel >= config_.goal_displacement - config_.goal_tolerance) {
          return finish(Termination::GoalReached, s.time, s);
        }
        return finish(Termination::TimeOut, s.time, s);
      }
      if (s.time >= t0 + config_.duration - 0.5 * dt) return finish(Termination::TimeOut, s.time, s);
    }
  }

 private:
  void log(const SystemState& s, const std::vector<ContactWrench>* wrenches = nullptr) {
    const std::vector<ContactWrench> w = wrenches ? *wrenches : contact_wrenches(model_, s, contacts_);
    LogSample ls;
    ls.state = s;
    const Kinematics kin = forward_kinematics(model_, s);
    for (std::size_t c = 0; c < contacts_.size(); ++c) {
      ContactSample cs;
      cs.attached = contacts_[c].attached;
      cs.anchor = contacts_[c].anchor;
      cs.anchor_rotation = contacts_[c].anchor_rotation;
      cs.force = w[c].force;
      cs.moment = w[c].moment;
      cs.tensile = cs.attached ? tensile_component(contacts_[c], cs.force) : 0.0;
      if (cs.attached) {
        const Vec3 r = kin.tip_positions[contacts_[c].limb] - s.base_position;
        ls.external.head<3>() += cs.force;
        ls.external.tail<3>() += cs.moment + r.cross(cs.force);
      }
      ls.contacts.push_back(cs);
    }
    ls.momentum = spatial_momentum_about(model_, s, s.base_position);
    if (!log_.samples.empty() && log_.samples.back().state.time == s.time) {
      log_.samples.back() = std::move(ls);
    } else {
      log_.samples.push_back(std::move(ls));
    }
  }

  SimLog finish(Termination cause, double t, const std::optional<SystemState>& last = std::nullopt) {
    if (last) log(*last);
    log_.cause = cause;
    log_.end_time = t;
    const SystemState& s = log_.samples.back().state;
    log_.displacement = (s.base_position - start_).dot(config_.goal_direction.normalized());
    return std::move(log_);
  }

  const RobotModel& model_;
  const MotionPlan& plan_;
  const SimConfig& config_;
  std::vector<ContactPoint> contacts_;
  std::vector<bool> lost_;
  Vec3 start_ = Vec3::Zero();
  SimLog log_;
};

}  // namespace

SimLog run_scenario(const RobotModel& model, const MotionPlan& plan, const SimConfig& config) {
  config.validate(model);
  if (plan.samples.empty()) throw DomainError("cannot simulate an empty plan");
  if (plan.failure && plan.failure->kind != "singularity") {
    throw PlanError(plan.failure->kind, plan.failure->message, plan.failure->phase, plan.failure->time);
  }
  check_dimensions(model, plan.samples.front().state);
  return Runner(model, plan, config).run();
}

}  // namespace ramp
