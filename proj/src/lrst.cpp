#include "ramp/lrst.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace ramp {

void LrstWeights::validate() const {
  if (k1 < 0.0 || k2 < 0.0 || k3 < 0.0) throw ConfigError("lrst", "weights must be non-negative");
  if (sample_count < 16) throw ConfigError("lrst.samples", "need at least 16 samples");
  if (!(height >= 0.0)) throw ConfigError("lrst.height", "step height must be non-negative");
}

std::vector<VecX> grid_derivative(const std::vector<VecX>& v, double step) {
  const std::size_t n = v.size();
  std::vector<VecX> d(n);
  if (n < 3) {
    for (auto& x : d) x = VecX::Zero(n ? v[0].size() : 0);
    if (n == 2) d[0] = d[1] = (v[1] - v[0]) / step;
    return d;
  }
  d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * step);
  for (std::size_t k = 1; k + 1 < n; ++k) d[k] = (v[k + 1] - v[k - 1]) / (2.0 * step);
  d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * step);
  return d;
}

ObjectiveValue objective(const RobotModel& model, const SystemState& state, const SwingPlan& plan,
                         const LrstWeights& weights, ObjectiveTrace* trace) {
  const int n = weights.sample_count;
  const double ts = plan.path_begin();
  const double te = plan.path_end();
  const double dt = (te - ts) / (n - 1);
  const Vec3 a = evaluate(plan.path, ts).position;
  const Vec3 b = evaluate(plan.path, te).position;

  std::vector<VecX> q(n);
  std::vector<double> heights(n);
  std::vector<Vec3> positions(n);
  VecX seed = state.limb_angles(model, plan.limb);
  for (int k = 0; k < n; ++k) {
    const double t = k == n - 1 ? te : ts + k * dt;
    positions[k] = evaluate(plan.path, t).position;
    heights[k] = height_above_chord(positions[k], a, b, plan.up);
    try {
      q[k] = inverse_kinematics(model, plan.limb, {positions[k], std::nullopt},
                                state.base_position, state.base_orientation, seed);
    } catch (const Error&) {
      return ObjectiveValue::infeasible();
    }
    seed = q[k];
  }

  const std::vector<VecX> rates = grid_derivative(q, dt);
  std::vector<VecX> momentum(n);
  SystemState s = state;
  for (int k = 0; k < n; ++k) {
    s.set_limb_angles(model, plan.limb, q[k]);
    const Kinematics kin = forward_kinematics(model, s);
    momentum[k] = coupling_matrix(model, kin, plan.limb) * rates[k];
  }
  const std::vector<VecX> mdot = grid_derivative(momentum, dt);

  double peak = 0.0;
  for (const VecX& m : mdot) peak = std::max(peak, m.norm());
  const double hmax = *std::max_element(heights.begin(), heights.end());
  double hmean = 0.0;
  for (double h : heights) hmean += h;
  hmean /= n;

  ObjectiveValue v;
  v.j1 = weights.k1 * peak;
  v.j2 = weights.k2 * std::abs(weights.height - hmax) + weights.k3 * std::abs(weights.height - hmean);
  v.total = v.j1 + v.j2;

  if (trace) {
    trace->times.resize(n);
    for (int k = 0; k < n; ++k) trace->times[k] = k == n - 1 ? te : ts + k * dt;
    trace->positions = std::move(positions);
    trace->limb_angles = std::move(q);
    trace->limb_rates = rates;
    trace->momentum = std::move(momentum);
    trace->momentum_rate = mdot;
    trace->heights = std::move(heights);
  }
  return v;
}

SwingPlan make_swing_plan(const SwingRequest& r, SwingPath path) {
  SwingPlan p;
  p.path = std::move(path);
  p.limb = r.limb;
  p.release_height = r.release_height;
  p.grasp_height = r.grasp_height;
  p.start_grasp = r.start_grasp;
  p.target_grasp = r.target_grasp;
  p.up = r.up.normalized();
  p.t_begin = r.t_begin;
  p.t_end = r.t_end;
  return p;
}

SwingPlan baseline_swing(const SwingRequest& r, double step_height) {
  return make_swing_plan(r, make_via_point_spline(r.path_start(), r.path_target(), step_height,
                                                  r.up, r.path_begin(), r.path_end()));
}

namespace {

// Uniform in [-1, 1) straight from the engine bits, identical on every
// standard library.
double symmetric_uniform(std::mt19937_64& rng) {
  return 2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0;
}

}  // namespace

OptimizedSwing optimize_swing(const RobotModel& model, const SystemState& state,
                              const SwingRequest& request, const LrstWeights& weights,
                              const OptimizerSettings& settings) {
  weights.validate();
  const bool planar = model.planar();
  const int per_point = planar ? 2 : 3;
  const Vec3 start = request.path_start();
  const Vec3 target = request.path_target();
  const double t0 = request.path_begin();
  const double tf = request.path_end();

  auto unpack = [&](const VecX& x) {
    Vec3 a3 = start, a4 = start;
    a3.head(per_point) = x.head(per_point);
    a4.head(per_point) = x.tail(per_point);
    return std::pair{a3, a4};
  };
  auto pack = [&](const Vec3& a3, const Vec3& a4) {
    VecX x(2 * per_point);
    x << a3.head(per_point), a4.head(per_point);
    return x;
  };
  auto plan_for = [&](const VecX& x) {
    const auto [a3, a4] = unpack(x);
    return make_swing_plan(request, boundary_constrained_curve(start, target, t0, tf, a3, a4));
  };
  auto f = [&](const VecX& x) { return objective(model, state, plan_for(x), weights).total; };

  const Vec3 mid = 0.5 * (start + target);
  const Vec3 lift = weights.height * request.up.normalized();
  const double spread = std::max(weights.height, 0.5 * (target - start).norm());

  OptimizedSwing out;
  out.seeds.push_back(pack(mid, mid));
  out.seeds.push_back(pack(mid + lift, mid + lift));
  out.seeds.push_back(pack(mid - lift, mid - lift));
  // equal inner points lift the apex by 70/128 of their offset
  out.seeds.push_back(pack(mid + lift * (128.0 / 70.0), mid + lift * (128.0 / 70.0)));
  std::mt19937_64 rng(settings.seed);
  while (static_cast<int>(out.seeds.size()) < settings.starts) {
    VecX x = pack(mid + lift, mid + lift);
    for (int i = 0; i < x.size(); ++i) x[i] += spread * symmetric_uniform(rng);
    out.seeds.push_back(x);
  }
  out.seeds.resize(settings.starts);

  double best = kInf;
  for (int s = 0; s < settings.starts; ++s) {
    out.seed_values.push_back(objective(model, state, plan_for(out.seeds[s]), weights));
    out.runs.push_back(nelder_mead(f, out.seeds[s], settings.simplex));
    if (out.runs.back().value < best) {
      best = out.runs.back().value;
      out.best_start = s;
    }
  }
  if (out.best_start < 0) {
    throw InfeasibleTrajectory("no feasible swing trajectory for limb " +
                               model.limbs.at(request.limb).name);
  }
  out.plan = plan_for(out.runs[out.best_start].x);
  out.value = objective(model, state, out.plan, weights);
  return out;
}

}  // namespace ramp
