#include "doctest.h"
#include "oracles.hpp"

#include "ramp/kinematics.hpp"
#include "ramp/trajectory.hpp"

using namespace ramp;

namespace {

RobotModel lone_body() {
  RobotModel m;
  m.base_mode = BaseMode::Spatial;
  m.base.mass = 2.0;
  m.base.inertia = Eigen::Vector3d(0.1, 0.2, 0.3).asDiagonal();
  m.base.com = Vec3(0.01, -0.02, 0.03);
  m.finalize();
  return m;
}

Quat small_rotation(const Vec3& w) {
  return w.norm() == 0.0 ? Quat::Identity() : Quat(Eigen::AngleAxisd(w.norm(), w.normalized()));
}

}  // namespace

TEST_CASE("zero configuration puts the tip at the summed offsets") {
  const RobotModel m = oracle::dual_arm();
  SystemState s = SystemState::zero(m);
  const Kinematics k = forward_kinematics(m, s);
  for (int limb = 0; limb < m.num_limbs(); ++limb) {
    Vec3 expected = Vec3::Zero();
    for (int j : m.limbs[limb].joints) expected += m.links[j].offset;
    expected += m.limbs[limb].tip;
    CHECK((k.tip_positions[limb] - expected).norm() < 1e-15);
    const Vec3 shoulder = m.links[m.limbs[limb].joints.front()].offset;
    CHECK((k.tip_positions[limb] - shoulder).norm() == doctest::Approx(0.025 + 0.0175 + 0.08725).epsilon(1e-12));
  }
}

TEST_CASE("forward kinematics matches the transform chain") {
  std::mt19937_64 rng(11);
  for (const RobotModel& m : {oracle::quadruped(), oracle::dual_arm()}) {
    for (int trial = 0; trial < 50; ++trial) {
      const SystemState s = oracle::random_state(m, rng);
      const Kinematics k = forward_kinematics(m, s);
      const oracle::Frames f = oracle::transform_chain(m, s.base_position, s.base_orientation, s.joint_angles);
      for (int i = 0; i < m.dof(); ++i) {
        CHECK((k.links[i].com - oracle::apply(f.links[i], m.links[i].body.com)).norm() < 1e-12);
        CHECK((k.links[i].rotation - f.links[i].topLeftCorner<3, 3>()).norm() < 1e-12);
      }
      for (int limb = 0; limb < m.num_limbs(); ++limb) {
        CHECK((k.tip_positions[limb] - oracle::tip(m, f, limb)).norm() < 1e-12);
      }
    }
  }
}

TEST_CASE("state with the wrong size is rejected") {
  const RobotModel m = oracle::dual_arm();
  SystemState s = SystemState::zero(m);
  s.joint_angles.resize(2);
  CHECK_THROWS_AS(forward_kinematics(m, s), DimensionError);
}

TEST_CASE("model invariants") {
  RobotModel m = oracle::dual_arm();
  SUBCASE("non-positive mass") {
    m.links[1].body.mass = 0.0;
    CHECK_THROWS_AS(m.finalize(), ModelError);
  }
  SUBCASE("indefinite inertia") {
    m.links[1].body.inertia(2, 2) = -1.0;
    CHECK_THROWS_AS(m.finalize(), ModelError);
  }
  SUBCASE("inverted limits") {
    m.links[0].lower = 1.0;
    m.links[0].upper = -1.0;
    CHECK_THROWS_AS(m.finalize(), ModelError);
  }
  SUBCASE("cycle") {
    m.links[0].parent = 2;
    CHECK_THROWS_AS(m.finalize(), ModelError);
  }
}

TEST_CASE("jacobians match finite differences of forward kinematics") {
  std::mt19937_64 rng(5);
  const double h = 1e-6;
  for (const RobotModel& m : {oracle::quadruped(), oracle::dual_arm()}) {
    for (int trial = 0; trial < 20; ++trial) {
      const SystemState s = oracle::random_state(m, rng);
      for (int limb = 0; limb < m.num_limbs(); ++limb) {
        const LimbJacobian j = jacobians(m, s, limb, Task::Position);
        const std::vector<int> rows = task_rows(m, Task::Position);
        const auto& joints = m.limbs[limb].joints;
        for (std::size_t c = 0; c < joints.size(); ++c) {
          SystemState a = s, b = s;
          a.joint_angles[joints[c]] += h;
          b.joint_angles[joints[c]] -= h;
          const Vec3 d = (forward_kinematics(m, a).tip_positions[limb] - forward_kinematics(m, b).tip_positions[limb]) / (2 * h);
          for (std::size_t r = 0; r < rows.size(); ++r) CHECK(std::abs(j.manip(r, c) - d[rows[r]]) < 1e-5);
        }
        const auto sel = m.base_selection();
        for (int c = 0; c < m.base_dofs(); ++c) {
          const Vec6 dir = sel.col(c);
          SystemState a = s, b = s;
          a.base_position += h * dir.head<3>();
          b.base_position -= h * dir.head<3>();
          a.base_orientation = small_rotation(h * dir.tail<3>()) * s.base_orientation;
          b.base_orientation = small_rotation(-h * dir.tail<3>()) * s.base_orientation;
          const Vec3 d = (forward_kinematics(m, a).tip_positions[limb] - forward_kinematics(m, b).tip_positions[limb]) / (2 * h);
          for (std::size_t r = 0; r < rows.size(); ++r) CHECK(std::abs(j.base(r, c) - d[rows[r]]) < 1e-5);
        }
      }
    }
  }
}

TEST_CASE("jacobian first-order consistency under small perturbations") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 1.0);
  const RobotModel m = oracle::quadruped();
  for (int trial = 0; trial < 20; ++trial) {
    const SystemState s = oracle::random_state(m, rng);
    VecX dir(m.dof());
    for (int i = 0; i < m.dof(); ++i) dir[i] = n(rng);
    double previous = kInf;
    for (double eps : {1e-2, 1e-3}) {
      SystemState p = s;
      p.joint_angles += eps * dir;
      double err = 0.0;
      for (int limb = 0; limb < m.num_limbs(); ++limb) {
        const LimbJacobian j = jacobians(m, s, limb);
        const VecX predicted = j.manip * (p.limb_angles(m, limb) - s.limb_angles(m, limb));
        const Vec3 actual = forward_kinematics(m, p).tip_positions[limb] - forward_kinematics(m, s).tip_positions[limb];
        err = std::max(err, (actual - predicted).norm());
      }
      // second-order remainder: a tenth of the step gives about a hundredth of the error
      if (previous < kInf) CHECK(err < 0.02 * previous);
      previous = err;
    }
  }
}

TEST_CASE("rigid translation of the base moves the tip identically") {
  const RobotModel m = oracle::quadruped();
  std::mt19937_64 rng(3);
  SystemState s = oracle::random_state(m, rng);
  s.joint_rates.setZero();
  s.base_twist << 1.0, 0.0, 0.0, 0.0, 0.0, 0.0;
  for (int limb = 0; limb < m.num_limbs(); ++limb) {
    CHECK((end_effector_velocity(m, s, limb) - Vec3::UnitX()).norm() < 1e-15);
  }
}

TEST_CASE("pseudoinverse reproduces the jacobian away from singularities") {
  std::mt19937_64 rng(21);
  const RobotModel m = oracle::quadruped();
  int checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const SystemState s = oracle::random_state(m, rng);
    for (int limb = 0; limb < m.num_limbs(); ++limb) {
      const LimbJacobian j = jacobians(m, s, limb);
      if (j.sigma_min < 1e-2) continue;
      CHECK((j.manip * j.manip_pinv * j.manip - j.manip).cwiseAbs().maxCoeff() < 1e-8);
      ++checked;
    }
  }
  CHECK(checked > 50);
}

TEST_CASE("fully extended planar limb loses rank") {
  const RobotModel m = oracle::dual_arm();
  const SystemState s = SystemState::zero(m);
  const LimbJacobian j = jacobians(m, s, 0, Task::Position);
  CHECK(j.sigma_min < 1e-6);
}

TEST_CASE("lone rigid body inertia") {
  const RobotModel m = lone_body();
  SystemState s = SystemState::zero(m);
  const InertiaSet in = inertia_matrices(m, s);
  // about the body origin with the COM offset c: [m I, -m [c]x; m [c]x, I_c - m [c]x^2]
  const Vec3 c = m.base.com;
  Mat6 expected;
  expected << m.base.mass * Mat3::Identity(), -m.base.mass * skew(c), m.base.mass * skew(c),
      m.base.inertia - m.base.mass * skew(c) * skew(c);
  CHECK((in.base - expected).norm() < 1e-14);
  CHECK(in.coupling.empty());
}

TEST_CASE("base inertia is symmetric positive definite") {
  std::mt19937_64 rng(17);
  for (const RobotModel& m : {oracle::quadruped(), oracle::dual_arm()}) {
    for (int trial = 0; trial < 20; ++trial) {
      const InertiaSet in = inertia_matrices(m, oracle::random_state(m, rng));
      CHECK((in.base - in.base.transpose()).norm() < 1e-14);
      CHECK(Eigen::SelfAdjointEigenSolver<MatX>(in.base).eigenvalues().minCoeff() > 0.0);
    }
  }
}

TEST_CASE("momentum matches the per-link sum on random states") {
  std::mt19937_64 rng(1);
  for (const RobotModel& m : {oracle::quadruped(), oracle::dual_arm()}) {
    for (int trial = 0; trial < 100; ++trial) {
      const SystemState s = oracle::random_state(m, rng);
      const Vec6 ref = oracle::per_link_momentum(m, s, s.base_position);
      const MomentumState mom = system_momentum(m, s, {0});
      const VecX reduced = m.base_selection().transpose() * ref;
      CHECK((mom.total - reduced).cwiseAbs().maxCoeff() < 1e-9);
      CHECK((spatial_momentum_about(m, s, Vec3(0.3, -0.2, 0.1)) - oracle::per_link_momentum(m, s, Vec3(0.3, -0.2, 0.1)))
                .cwiseAbs()
                .maxCoeff() < 1e-9);
      CHECK((mom.base_part + mom.support_part + mom.swing_part - mom.total).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("static robot has zero momentum and joint-free motion reduces to the base term") {
  const RobotModel m = oracle::quadruped();
  std::mt19937_64 rng(8);
  SystemState s = oracle::random_state(m, rng);
  s.base_twist.setZero();
  s.joint_rates.setZero();
  CHECK(system_momentum(m, s, {1}).total.isZero(0.0));

  s = oracle::random_state(m, rng);
  s.joint_rates.setZero();
  const MomentumState mom = system_momentum(m, s, {1});
  const VecX expected = inertia_matrices(m, s).base * s.reduced_twist(m);
  CHECK(mom.total == expected);
  CHECK(mom.swing_part.isZero(0.0));
  CHECK(mom.support_part.isZero(0.0));
}

TEST_CASE("massless limbs do not couple") {
  RobotModel m = oracle::quadruped();
  for (LinkSpec& l : m.links) {
    l.body.mass = 0.0;
    l.body.inertia.setZero();
  }
  std::mt19937_64 rng(4);
  const InertiaSet in = inertia_matrices(m, oracle::random_state(m, rng));
  for (const MatX& c : in.coupling) CHECK(c.isZero(0.0));
}

TEST_CASE("planar model agrees with its spatial embedding") {
  const RobotModel planar = oracle::dual_arm();
  RobotModel spatial = planar;
  spatial.base_mode = BaseMode::Spatial;
  spatial.finalize();
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const SystemState s = oracle::random_state(planar, rng);
    const VecX a = system_momentum(planar, s, {1}).total;
    const VecX b = system_momentum(spatial, s, {1}).total;
    CHECK(std::abs(a[0] - b[0]) < 1e-9);
    CHECK(std::abs(a[1] - b[1]) < 1e-9);
    CHECK(std::abs(a[2] - b[5]) < 1e-9);
  }
}

TEST_CASE("inverse kinematics") {
  const RobotModel m = oracle::quadruped();
  SystemState s = SystemState::zero(m);
  s.base_position = Vec3(0, 0, 0.13);
  for (int limb = 0; limb < 4; ++limb) s.set_limb_angles(m, limb, Eigen::Vector3d(0.1, 0.5, -1.0));
  const Kinematics k = forward_kinematics(m, s);

  SUBCASE("fixed point") {
    const VecX q = inverse_kinematics(m, 0, {k.tip_positions[0], std::nullopt}, s.base_position, s.base_orientation,
                                      s.limb_angles(m, 0));
    CHECK((q - s.limb_angles(m, 0)).norm() < 1e-9);
  }
  SUBCASE("beyond reach") {
    const Vec3 far = s.base_position + Vec3(1.0, 1.0, 0.0);
    CHECK_THROWS_AS(inverse_kinematics(m, 0, {far, std::nullopt}, s.base_position, s.base_orientation,
                                       s.limb_angles(m, 0)),
                    UnreachableTarget);
  }
  SUBCASE("round trip along a swept curve") {
    const int limb = 1;
    const Vec3 a = k.tip_positions[limb];
    const Vec3 b = a + Vec3(0.08, 0.0, 0.0);
    const BezierCurve c = boundary_constrained_curve(a, b, 0.0, 1.0, a + Vec3(0.02, 0, 0.05), b + Vec3(-0.02, 0, 0.05));
    VecX seed = s.limb_angles(m, limb);
    for (int i = 0; i <= 64; ++i) {
      const Vec3 target = c.evaluate(i / 64.0).position;
      seed = inverse_kinematics(m, limb, {target, std::nullopt}, s.base_position, s.base_orientation, seed);
      SystemState t = s;
      t.set_limb_angles(m, limb, seed);
      CHECK((forward_kinematics(m, t).tip_positions[limb] - target).norm() < 1e-6);
      CHECK(joint_limit_violations(m, t.joint_angles).empty());
    }
  }
}
