// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails. Pass criterion numbers as arguments to
// run a subset.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "ramp/distribution.hpp"
#include "ramp/gait.hpp"
#include "ramp/lrst.hpp"
#include "ramp/scenario.hpp"
#include "ramp/simdyn.hpp"

using namespace ramp;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

ScenarioConfig shipped(const std::string& name) {
  return load_scenario(oracle::source_path("configs/scenarios/" + name + ".json"));
}

const std::vector<std::string>& shipped_names() {
  static const std::vector<std::string> names = {"planar_bl", "planar_lrst", "planar_pmd", "planar_fmd",
                                                 "quadruped_bl", "quadruped_lrst", "quadruped_pmd", "quadruped_fmd"};
  return names;
}

// First-run summaries, reused by the determinism check.
std::map<std::string, RunSummary>& summaries() {
  static std::map<std::string, RunSummary> s;
  return s;
}

const RunSummary& summary_of(const std::string& name) {
  auto it = summaries().find(name);
  if (it == summaries().end()) it = summaries().emplace(name, run(shipped(name)).summary).first;
  return it->second;
}

// Planar baseline swing; the identities hold for any swing path.
struct PlanarSwing {
  Scenario scenario;
  SwingPlan plan;
};

const PlanarSwing& planar_swing() {
  static const PlanarSwing p = [] {
    PlanarSwing out{prepare(shipped("planar_bl")), {}};
    const MotionPlan plan = assemble_plan(out.scenario.model, out.scenario.schedule, out.scenario.plan_options,
                                          out.scenario.initial, out.scenario.config.gait.samples);
    out.plan = plan.swings.at(0);
    return out;
  }();
  return p;
}

// largest |total - (1 - alpha) swing| over the plan, relative to the peak swing momentum
double residual_ratio(double alpha) {
  const PlanarSwing& ps = planar_swing();
  const RobotModel& m = ps.scenario.model;
  const int swing = ps.plan.limb;
  std::vector<int> supports;
  for (int i = 0; i < m.num_limbs(); ++i) {
    if (i != swing) supports.push_back(i);
  }
  const auto samples = distribute_over_plan(m, ps.scenario.initial, ps.plan, supports, DistributionFactor(alpha));
  double peak = 0.0, worst = 0.0;
  for (const SystemState& s : samples) peak = std::max(peak, system_momentum(m, s, {swing}).swing_part.norm());
  for (const SystemState& s : samples) {
    const MomentumState mom = system_momentum(m, s, {swing});
    worst = std::max(worst, (mom.total - (1.0 - alpha) * mom.swing_part).norm());
  }
  return worst / peak;
}

Outcome momentum_cancellation() {
  const double r = residual_ratio(1.0);
  return {r <= 1e-8, "max |L_total| / peak |L_swing| = " + fmt("%.3g", r) + " (limit 1e-8)"};
}

Outcome residual_identity() {
  double worst = 0.0;
  for (double a : {0.0, 0.25, 0.5, 0.75, 1.0}) worst = std::max(worst, residual_ratio(a));
  return {worst <= 1e-8, "worst relative residual over alpha in {0,.25,.5,.75,1} = " + fmt("%.3g", worst) +
                             " (limit 1e-8)"};
}

Outcome quadruped_outcomes() {
  const RunSummary& bl = summary_of("quadruped_bl");
  const RunSummary& pmd = summary_of("quadruped_pmd");
  const RunSummary& fmd = summary_of("quadruped_fmd");
  const ScenarioConfig c = shipped("quadruped_bl");
  const double five_cycles = 5.0 * 4.0 * (c.gait.swing_period + c.gait.shift_period);
  double bl_detached = kInf;
  for (const SimEvent& e : bl.events) {
    if (e.kind == "detachment") bl_detached = std::min(bl_detached, e.time);
  }
  const bool bl_ok = bl.cause == "detached_floating" && bl_detached <= five_cycles;
  const bool pmd_ok = pmd.cause == "goal_reached" && pmd.unplanned_detachments == 0 &&
                      pmd.distance >= c.sim.goal - c.sim.goal_tolerance;
  const bool fmd_ok = fmd.cause == "singularity";
  std::ostringstream d;
  d << "BL " << bl.cause << " (first detachment t=" << fmt("%.3f", bl_detached) << " s)"
    << ", PMD " << pmd.cause << " " << fmt("%.4f", pmd.distance) << " m with " << pmd.unplanned_detachments
    << " detachments, FMD " << fmd.cause << " t=" << fmt("%.3f", fmd.end_time) << " s";
  return {bl_ok && pmd_ok && fmd_ok, d.str()};
}

Outcome planar_reduction() {
  const RunSummary& bl = summary_of("planar_bl");
  const RunSummary& lrst = summary_of("planar_lrst");
  const RunSummary& pmd = summary_of("planar_pmd");
  const RunSummary& fmd = summary_of("planar_fmd");
  const double max_ratio = fmd.max_force / bl.max_force;
  const double mean_ratio = fmd.mean_force / bl.mean_force;
  bool ordered = true;
  for (auto field : {&RunSummary::max_force, &RunSummary::mean_force, &RunSummary::max_moment,
                     &RunSummary::mean_moment}) {
    ordered = ordered && bl.*field >= lrst.*field && lrst.*field >= pmd.*field && pmd.*field >= fmd.*field;
  }
  const bool all_goal = bl.cause == "goal_reached" && lrst.cause == "goal_reached" && pmd.cause == "goal_reached" &&
                        fmd.cause == "goal_reached";
  std::ostringstream d;
  d << "FMD/BL max force " << fmt("%.3f", max_ratio) << " (<= 0.6), mean " << fmt("%.3f", mean_ratio)
    << " (<= 0.5), ordering BL>=LRST>=PMD>=FMD " << (ordered ? "holds" : "violated");
  return {all_goal && ordered && max_ratio <= 0.6 && mean_ratio <= 0.5, d.str()};
}

Outcome lrst_improvement() {
  const Scenario sc = prepare(shipped("planar_lrst"));
  const RobotModel& m = sc.model;
  const int limb = 1;
  const Vec3 nominal = forward_kinematics(m, sc.initial).tip_positions[limb];
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int pairs = 0, improved = 0, unsolved = 0, tried = 0, height_ok = 0, height_checked = 0;
  double endpoint_error = 0.0;
  while (pairs < 100 && tried < 1000) {
    ++tried;
    SwingRequest r;
    r.limb = limb;
    r.start_grasp = nominal + Vec3(0.02 * u(rng), 0.0, 0.0);
    r.target_grasp = r.start_grasp + Vec3(0.13 + 0.03 * u(rng), 0.0, 0.0);
    r.up = Vec3::UnitY();
    r.t_end = 2.0;
    LrstWeights w;
    w.height = 0.06 + 0.01 * u(rng);
    const ObjectiveValue base = objective(m, sc.initial, baseline_swing(r, w.height), w);
    if (!base.feasible) continue;
    OptimizerSettings settings;
    settings.seed = static_cast<std::uint64_t>(pairs + 1);
    ++pairs;
    OptimizedSwing best;
    try {
      best = optimize_swing(m, sc.initial, r, w, settings);
    } catch (const InfeasibleTrajectory&) {
      ++unsolved;
      continue;
    }
    if (best.value.total <= base.total) ++improved;
    const auto& curve = std::get<BezierCurve>(best.plan.path);
    endpoint_error = std::max(endpoint_error, (curve.evaluate(curve.t0).position - r.start_grasp).norm());
    endpoint_error = std::max(endpoint_error, (curve.evaluate(curve.tf).position - r.target_grasp).norm());

    if (pairs % 10 == 0) {
      LrstWeights hw = w;
      hw.k1 = 0.0;
      const OptimizedSwing tall = optimize_swing(m, sc.initial, r, hw, settings);
      ObjectiveTrace trace;
      objective(m, sc.initial, tall.plan, hw, &trace);
      const double top = *std::max_element(trace.heights.begin(), trace.heights.end());
      ++height_checked;
      if (std::abs(top - hw.height) <= 0.05 * hw.height) ++height_ok;
    }
  }
  std::ostringstream d;
  d << improved << "/" << pairs << " pairs at or below the baseline (>= 95, " << unsolved << " without a feasible optimum), endpoint error "
    << fmt("%.2g", endpoint_error) << " (<= 1e-12), height-only apex within 5% on " << height_ok << "/"
    << height_checked;
  return {pairs == 100 && improved >= 95 && endpoint_error <= 1e-12 && height_ok == height_checked, d.str()};
}

Outcome dynamics_oracles() {
  std::mt19937_64 rng(99);
  double momentum_err = 0.0;
  for (const RobotModel& m : {oracle::quadruped(), oracle::dual_arm()}) {
    for (int k = 0; k < 100; ++k) {
      const SystemState s = oracle::random_state(m, rng);
      const VecX ref = m.base_selection().transpose() * oracle::per_link_momentum(m, s, s.base_position);
      momentum_err = std::max(momentum_err, (system_momentum(m, s, {0}).total - ref).cwiseAbs().maxCoeff());
    }
  }

  double jac_err = 0.0;
  const double h = 1e-6;
  for (const RobotModel& m : {oracle::quadruped(), oracle::dual_arm()}) {
    for (int k = 0; k < 20; ++k) {
      const SystemState s = oracle::random_state(m, rng);
      for (int limb = 0; limb < m.num_limbs(); ++limb) {
        const LimbJacobian j = jacobians(m, s, limb, Task::Position);
        const std::vector<int> rows = task_rows(m, Task::Position);
        const auto& joints = m.limbs[limb].joints;
        for (std::size_t c = 0; c < joints.size(); ++c) {
          SystemState a = s, b = s;
          a.joint_angles[joints[c]] += h;
          b.joint_angles[joints[c]] -= h;
          const Vec3 fd = (oracle::tip(m, oracle::transform_chain(m, a.base_position, a.base_orientation, a.joint_angles), limb) -
                           oracle::tip(m, oracle::transform_chain(m, b.base_position, b.base_orientation, b.joint_angles), limb)) /
                          (2 * h);
          for (std::size_t r = 0; r < rows.size(); ++r) jac_err = std::max(jac_err, std::abs(j.manip(r, c) - fd[rows[r]]));
        }
      }
    }
  }

  const oracle::TwoLink arm;
  const RobotModel two = arm.model();
  SystemState s = SystemState::zero(two);
  s.joint_angles = Eigen::Vector2d(0.4, -0.9);
  s.joint_rates = Eigen::Vector2d(0.5, 1.2);
  Eigen::Vector4d x;
  x << s.joint_angles, s.joint_rates;
  double lagrange_err = 0.0;
  const double dt = 1e-3;
  for (int k = 0; k < 1000; ++k) {
    const Eigen::Vector2d tau(0.8 * std::sin(3e-3 * k), -0.3 + 2e-4 * k);
    s = step(two, s, tau, {}, Vec3(0, -arm.g, 0), dt);
    auto f = [&](const Eigen::Vector4d& y) {
      Eigen::Vector4d d;
      d << y.tail<2>(), arm.acceleration(y.head<2>(), y.tail<2>(), tau);
      return d;
    };
    const Eigen::Vector4d k1 = f(x), k2 = f(x + 0.5 * dt * k1), k3 = f(x + 0.5 * dt * k2), k4 = f(x + dt * k3);
    x += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    lagrange_err = std::max(lagrange_err, (s.joint_angles - x.head<2>()).cwiseAbs().maxCoeff());
  }

  const RobotModel quad = oracle::quadruped();
  SystemState f = oracle::random_state(quad, rng, 0.3);
  const Vec6 l0 = spatial_momentum_about(quad, f, Vec3::Zero());
  double drift = 0.0;
  for (int k = 0; k < 10000; ++k) {
    f = step(quad, f, VecX::Zero(quad.dof()), {}, Vec3::Zero(), 1e-3);
    if (k % 100 == 99) drift = std::max(drift, (spatial_momentum_about(quad, f, Vec3::Zero()) - l0).norm() / l0.norm());
  }

  std::ostringstream d;
  d << "momentum " << fmt("%.2g", momentum_err) << " (<= 1e-9), jacobian " << fmt("%.2g", jac_err)
    << " (<= 1e-5), two-link " << fmt("%.2g", lagrange_err) << " (<= 1e-6), drift over 10 s " << fmt("%.2g", drift)
    << " (<= 1e-8)";
  return {momentum_err <= 1e-9 && jac_err <= 1e-5 && lagrange_err <= 1e-6 && drift <= 1e-8, d.str()};
}

Outcome determinism() {
  int same = 0;
  std::string differing;
  for (const std::string& name : shipped_names()) {
    const std::string first = to_json(summary_of(name)).dump();
    const std::string second = to_json(run(shipped(name)).summary).dump();
    if (first == second) {
      ++same;
    } else {
      differing += " " + name;
    }
  }
  std::ostringstream d;
  d << same << "/" << shipped_names().size() << " shipped configs bit-identical across two runs";
  if (!differing.empty()) d << "; differing:" << differing;
  return {same == static_cast<int>(shipped_names().size()), d.str()};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    std::string name;
    std::function<Outcome()> check;
    double budget;  // s
  };
  const std::vector<Criterion> criteria = {
      {"momentum cancellation at alpha = 1", momentum_cancellation, 1.0},
      {"residual momentum identity", residual_identity, 5.0},
      {"quadruped outcomes", quadruped_outcomes, 600.0},
      {"planar force reduction", planar_reduction, 60.0},
      {"swing optimizer improvement", lrst_improvement, 120.0},
      {"dynamics oracles", dynamics_oracles, 60.0},
      {"determinism", determinism, kInf},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].check();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > criteria[i].budget) o.pass = false;
    std::printf("[%s] %d %s: %s [%.1f s", o.pass ? "PASS" : "FAIL", id, criteria[i].name.c_str(), o.detail.c_str(), secs);
    if (std::isfinite(criteria[i].budget)) std::printf(", budget %.0f s", criteria[i].budget);
    std::printf("]\n");
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
