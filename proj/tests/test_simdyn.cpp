#include "doctest.h"
#include "oracles.hpp"

#include "ramp/simdyn.hpp"

using namespace ramp;

namespace {

ContactPoint anchored(double holding = 0.9) {
  ContactPoint c;
  c.attached = true;
  c.anchor = Vec3(0.1, 0.2, 0.0);
  c.params.stiffness = 4000.0;
  c.params.damping = 1.0;
  c.params.holding_force = holding;
  c.params.normal = Vec3::UnitZ();
  return c;
}

// Plan holding the joints at `angles` with the base at the origin.
MotionPlan hold_plan(const RobotModel& m, const VecX& angles, double duration) {
  MotionPlan plan;
  for (double t : {0.0, duration}) {
    PlanSample s;
    s.state = SystemState::zero(m);
    s.state.joint_angles = angles;
    s.state.time = t;
    s.attached.assign(m.num_limbs(), false);
    s.end_effectors.assign(m.num_limbs(), Vec3::Zero());
    plan.samples.push_back(s);
  }
  plan.step = duration;
  return plan;
}

RobotModel pendulum(double inertia) {
  RobotModel m;
  m.base_mode = BaseMode::Fixed;
  m.base.mass = 1.0;
  m.base.inertia = Mat3::Identity();
  LinkSpec l;
  l.body.mass = 0.5;
  l.body.inertia = Eigen::Vector3d(inertia, inertia, inertia).asDiagonal();
  l.body.com = Vec3::Zero();
  l.lower = -10.0;
  l.upper = 10.0;
  m.links = {l};
  m.limbs = {{"p", {0}, Vec3(0.1, 0, 0)}};
  m.finalize();
  return m;
}

const Scenario& planar_scenario(const std::string& mode) {
  static std::map<std::string, Scenario> cache;
  auto it = cache.find(mode);
  if (it == cache.end()) {
    it = cache.emplace(mode, prepare(load_scenario(oracle::source_path("configs/scenarios/planar_" + mode + ".json"))))
             .first;
  }
  return it->second;
}

}  // namespace

TEST_CASE("contact spring") {
  ContactPoint c = anchored();
  CHECK(contact_force(c, c.anchor, Vec3::Zero()).isZero(0.0));
  const Vec3 f = contact_force(c, c.anchor + Vec3(0, 0, 1e-3), Vec3::Zero());
  CHECK(f.z() == doctest::Approx(-4.0));
  CHECK(contact_moment(c, Mat3::Identity(), Vec3::UnitZ()).isZero(0.0));

  c.clamp = true;
  c.params.rot_stiffness = 2.0;
  c.params.rot_damping = 0.5;
  const Vec3 mo = contact_moment(c, Eigen::AngleAxisd(0.1, Vec3::UnitZ()).toRotationMatrix(), Vec3(0, 0, 1.0));
  CHECK(mo.z() == doctest::Approx(-2.0 * 0.1 - 0.5));
}

TEST_CASE("detachment threshold") {
  const ContactPoint c = anchored(0.9);
  CHECK(detachment_check(c, Vec3(0, 0, -0.89)) == Detachment::Holds);
  CHECK(detachment_check(c, Vec3(0, 0, -0.91)) == Detachment::Detaches);
  CHECK(detachment_check(c, Vec3(0, 0, 100.0)) == Detachment::Holds);
  CHECK(detachment_check(c, Vec3(50.0, 0, 0)) == Detachment::Holds);
  CHECK(tensile_component(c, Vec3(0, 0, -0.5)) == doctest::Approx(0.5));
}

TEST_CASE("contact parameter validation") {
  ContactParameters p;
  p.holding_force = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = {};
  p.normal = Vec3(0, 0, 2);
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("PD law") {
  const oracle::TwoLink arm;
  const RobotModel m = arm.model();
  const MotionPlan plan = hold_plan(m, Eigen::Vector2d(0.3, -0.2), 1.0);
  PdGains g{Eigen::Vector2d(5.0, 7.0), Eigen::Vector2d(0.0, 0.0)};
  SystemState s = SystemState::zero(m);
  s.joint_angles = Eigen::Vector2d(0.3, -0.2);
  CHECK(pd_torques(plan, s, 0.5, g).isZero(0.0));
  s.joint_angles = Eigen::Vector2d(0.2, -0.1);
  CHECK((pd_torques(plan, s, 0.5, g) - Eigen::Vector2d(0.5, -0.7)).norm() < 1e-14);
  g.kp.resize(3);
  CHECK_THROWS_AS(pd_torques(plan, s, 0.5, g), DimensionError);
}

TEST_CASE("PD step response matches the second-order model") {
  const double inertia = 0.02;
  const RobotModel m = pendulum(inertia);
  const double kp = 2.0, kd = 0.1, target = 0.5;
  const MotionPlan plan = hold_plan(m, VecX::Constant(1, target), 5.0);
  const PdGains g{VecX::Constant(1, kp), VecX::Constant(1, kd)};
  // I q'' + kd q' + kp q = kp r, underdamped
  const double wn = std::sqrt(kp / inertia);
  const double zeta = kd / (2.0 * std::sqrt(kp * inertia));
  const double wd = wn * std::sqrt(1 - zeta * zeta);
  SystemState s = SystemState::zero(m);
  const double dt = 1e-3;
  double worst = 0.0;
  for (int k = 1; k <= 2000; ++k) {
    s = step(m, s, pd_torques(plan, s, s.time, g), {}, Vec3::Zero(), dt);
    const double t = k * dt;
    const double expected =
        target * (1 - std::exp(-zeta * wn * t) * (std::cos(wd * t) + zeta / std::sqrt(1 - zeta * zeta) * std::sin(wd * t)));
    worst = std::max(worst, std::abs(s.joint_angles[0] - expected));
  }
  CHECK(worst < 0.05 * target);
}

TEST_CASE("two-link forward dynamics matches the Lagrangian") {
  const oracle::TwoLink arm;
  const RobotModel m = arm.model();
  const Vec3 gravity(0, -arm.g, 0);
  SystemState s = SystemState::zero(m);
  s.joint_angles = Eigen::Vector2d(0.4, -0.9);
  s.joint_rates = Eigen::Vector2d(0.5, 1.2);
  Eigen::Vector2d q = s.joint_angles, qd = s.joint_rates;
  auto tau_at = [](double t) { return Eigen::Vector2d(0.8 * std::sin(3 * t), -0.3 + 0.2 * t); };

  const VecX acc = forward_dynamics(m, s, tau_at(0.0), {}, gravity);
  CHECK((acc - arm.acceleration(q, qd, tau_at(0.0))).norm() < 1e-10);

  const double dt = 1e-3;
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const double t = k * dt;
    const Eigen::Vector2d tau = tau_at(t);
    s = step(m, s, tau, {}, gravity, dt);
    auto f = [&](const Eigen::Vector4d& x) {
      Eigen::Vector4d d;
      d << x.tail<2>(), arm.acceleration(x.head<2>(), x.tail<2>(), tau);
      return d;
    };
    Eigen::Vector4d x;
    x << q, qd;
    const Eigen::Vector4d k1 = f(x), k2 = f(x + 0.5 * dt * k1), k3 = f(x + 0.5 * dt * k2), k4 = f(x + dt * k3);
    x += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    q = x.head<2>();
    qd = x.tail<2>();
    worst = std::max(worst, (s.joint_angles - q).cwiseAbs().maxCoeff());
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("mass matrix is consistent with kinetic energy") {
  const RobotModel m = oracle::quadruped();
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 10; ++trial) {
    const SystemState s = oracle::random_state(m, rng);
    const MatX mm = mass_matrix(m, s);
    CHECK((mm - mm.transpose()).norm() < 1e-14);
    // kinetic energy from per-body velocities
    const Kinematics k = forward_kinematics(m, s);
    VecX u(6 + m.dof());
    u << s.base_twist, s.joint_rates;
    double ke = 0.0;
    const MatX jb = point_jacobian(m, k, -1, k.base.com);
    const Vec6 vb = jb * u;
    ke += 0.5 * m.base.mass * vb.head<3>().squaredNorm() +
          0.5 * vb.tail<3>().dot(k.base.rotation * m.base.inertia * k.base.rotation.transpose() * vb.tail<3>());
    for (int i = 0; i < m.dof(); ++i) {
      const Vec6 v = point_jacobian(m, k, i, k.links[i].com) * u;
      const Mat3 inertia = k.links[i].rotation * m.links[i].body.inertia * k.links[i].rotation.transpose();
      ke += 0.5 * m.links[i].body.mass * v.head<3>().squaredNorm() + 0.5 * v.tail<3>().dot(inertia * v.tail<3>());
    }
    CHECK(kinetic_energy(m, s) == doctest::Approx(ke).epsilon(1e-12));
  }
}

TEST_CASE("free-floating momentum is conserved") {
  const RobotModel m = oracle::quadruped();
  std::mt19937_64 rng(23);
  SystemState s = oracle::random_state(m, rng, 0.3);
  const Vec6 l0 = spatial_momentum_about(m, s, Vec3::Zero());
  const double dt = 1e-3;
  double drift = 0.0;
  for (int k = 0; k < 10000; ++k) {
    s = step(m, s, VecX::Zero(m.dof()), {}, Vec3::Zero(), dt);
    if (k % 100 == 99) drift = std::max(drift, (spatial_momentum_about(m, s, Vec3::Zero()) - l0).norm() / l0.norm());
  }
  CHECK(drift <= 1e-8);
  CHECK(std::abs(s.base_orientation.norm() - 1.0) <= 1e-9);
}

TEST_CASE("lone body moves ballistically") {
  RobotModel m;
  m.base.mass = 1.5;
  m.base.inertia = Eigen::Vector3d(0.1, 0.1, 0.1).asDiagonal();
  m.finalize();
  SystemState s = SystemState::zero(m);
  s.base_twist << 0.3, -0.2, 0.1, 0, 0, 0;
  const Vec3 g(0, 0, -1.0);
  for (int k = 0; k < 1000; ++k) s = step(m, s, VecX::Zero(0), {}, g, 1e-3);
  const Vec3 expected = Vec3(0.3, -0.2, 0.1) + 0.5 * g;
  CHECK((s.base_position - expected).norm() < 1e-9);
  CHECK((s.base_twist.head<3>() - (Vec3(0.3, -0.2, 0.1) + g)).norm() < 1e-9);
}

TEST_CASE("timestep stability bound") {
  const RobotModel m = oracle::quadruped();
  ContactParameters c;
  double m_min = m.base.mass;
  for (const LinkSpec& l : m.links) m_min = std::min(m_min, l.body.mass);
  CHECK(SimConfig::stable_timestep(m, c) == doctest::Approx(1.0 / (20.0 * std::sqrt(4000.0 / m_min))));
  SimConfig cfg;
  cfg.gains = {VecX::Ones(m.dof()), VecX::Ones(m.dof())};
  cfg.timestep = 2.0 * SimConfig::stable_timestep(m, c);
  CHECK_THROWS_AS(cfg.validate(m), ConfigError);
  cfg.timestep = 0.5 * SimConfig::stable_timestep(m, c);
  CHECK_NOTHROW(cfg.validate(m));
}

TEST_CASE("planar single step simulation") {
  const Scenario& sc = planar_scenario("bl");
  const MotionPlan plan = assemble_plan(sc.model, sc.schedule, sc.plan_options, sc.initial, sc.config.gait.samples);
  const SimLog log = run_scenario(sc.model, plan, sc.sim);
  CHECK(log.cause == Termination::GoalReached);

  SUBCASE("logged forces equal the contact law") {
    for (std::size_t k = 0; k < log.samples.size(); k += 50) {
      const LogSample& ls = log.samples[k];
      std::vector<ContactPoint> contacts;
      for (int limb = 0; limb < sc.model.num_limbs(); ++limb) {
        ContactPoint c;
        c.limb = limb;
        c.attached = ls.contacts[limb].attached;
        c.anchor = ls.contacts[limb].anchor;
        c.anchor_rotation = ls.contacts[limb].anchor_rotation;
        c.clamp = true;
        c.params = sc.sim.contact;
        contacts.push_back(c);
      }
      const auto w = contact_wrenches(sc.model, ls.state, contacts);
      for (int limb = 0; limb < sc.model.num_limbs(); ++limb) {
        CHECK((w[limb].force - ls.contacts[limb].force).norm() <= 1e-12);
        CHECK((w[limb].moment - ls.contacts[limb].moment).norm() <= 1e-12);
      }
    }
  }
  SUBCASE("timestamps increase") {
    for (std::size_t k = 1; k < log.samples.size(); ++k) CHECK(log.samples[k].state.time > log.samples[k - 1].state.time);
  }
  SUBCASE("damping never adds energy") {
    double work = 0.0;
    for (std::size_t k = 1; k < log.samples.size(); ++k) {
      const double h = log.samples[k].state.time - log.samples[k - 1].state.time;
      const Kinematics kin = forward_kinematics(sc.model, log.samples[k].state);
      for (int limb = 0; limb < sc.model.num_limbs(); ++limb) {
        const ContactSample& c = log.samples[k].contacts[limb];
        if (!c.attached) continue;
        const Vec3 v = end_effector_velocity(sc.model, log.samples[k].state, limb, Task::Position);
        const Vec3 spring = -sc.sim.contact.stiffness * (kin.tip_positions[limb] - c.anchor);
        work -= (c.force - spring).dot(v) * h;
      }
    }
    CHECK(work >= 0.0);
  }
  SUBCASE("identical runs are bit-identical") {
    const SimLog again = run_scenario(sc.model, plan, sc.sim);
    REQUIRE(again.samples.size() == log.samples.size());
    for (std::size_t k = 0; k < log.samples.size(); ++k) {
      CHECK(again.samples[k].state.base_position == log.samples[k].state.base_position);
      CHECK(again.samples[k].state.joint_angles == log.samples[k].state.joint_angles);
      for (int limb = 0; limb < sc.model.num_limbs(); ++limb) {
        CHECK(again.samples[k].contacts[limb].force == log.samples[k].contacts[limb].force);
      }
    }
  }
  SUBCASE("halving the timestep barely moves the final base") {
    SimConfig fine = sc.sim;
    fine.timestep *= 0.5;
    const SimLog half = run_scenario(sc.model, plan, fine);
    CHECK((half.samples.back().state.base_position - log.samples.back().state.base_position).norm() < 1e-4);
  }
}

TEST_CASE("weak grippers detach and the robot floats") {
  const Scenario& sc = planar_scenario("bl");
  const MotionPlan plan = assemble_plan(sc.model, sc.schedule, sc.plan_options, sc.initial, sc.config.gait.samples);
  SimConfig weak = sc.sim;
  weak.contact.holding_force = 0.05;
  weak.float_time = 0.2;
  const SimLog log = run_scenario(sc.model, plan, weak);
  CHECK(log.cause == Termination::DetachedFloating);
  CHECK(log.unplanned_detachments >= 1);
  for (const SimEvent& e : log.events) {
    if (e.kind != "detachment") continue;
    CHECK(e.value > weak.contact.holding_force);
    bool seen = false;
    for (const LogSample& ls : log.samples) {
      if (std::abs(ls.state.time - e.time) < 1e-12) seen = seen || ls.contacts[e.limb].tensile > weak.contact.holding_force;
    }
    CHECK(seen);
  }
  double first = kInf;
  for (const SimEvent& e : log.events) {
    if (e.kind == "detachment") first = std::min(first, e.time);
  }
  CHECK(log.end_time == doctest::Approx(first + weak.float_time).epsilon(1e-6));
}

TEST_CASE("simulator refuses infeasible plans") {
  const Scenario& sc = planar_scenario("bl");
  MotionPlan plan = assemble_plan(sc.model, sc.schedule, sc.plan_options, sc.initial, sc.config.gait.samples);
  plan.failure = PlanFailure{"infeasible", "test", 0, 1.0};
  CHECK_THROWS_AS(run_scenario(sc.model, plan, sc.sim), PlanError);
}
