#include "ramp/trajectory.hpp"

#include <algorithm>
#include <cmath>

namespace ramp {

namespace {

constexpr std::array<double, 8> kBinom7{1, 7, 21, 35, 35, 21, 7, 1};
constexpr std::array<double, 7> kBinom6{1, 6, 15, 20, 15, 6, 1};
constexpr std::array<double, 6> kBinom5{1, 5, 10, 10, 5, 1};

template <std::size_t N>
std::array<double, N> bernstein(double s, const std::array<double, N>& binom) {
  constexpr int degree = static_cast<int>(N) - 1;
  std::array<double, N> sp{}, up{};
  sp[0] = 1.0;
  up[0] = 1.0;
  for (int k = 1; k <= degree; ++k) {
    sp[k] = sp[k - 1] * s;
    up[k] = up[k - 1] * (1.0 - s);
  }
  std::array<double, N> b{};
  for (int i = 0; i <= degree; ++i) b[i] = binom[i] * sp[i] * up[degree - i];
  return b;
}

// Clamp tiny excursions caused by rounding in callers computing t.
double checked_time(double t, double t0, double tf, const char* what) {
  const double slack = 1e-12 * std::max(1.0, std::abs(tf));
  if (t < t0 - slack || t > tf + slack) {
    throw DomainError(std::string(what) + ": time " + std::to_string(t) + " outside [" +
                      std::to_string(t0) + ", " + std::to_string(tf) + "]");
  }
  return std::clamp(t, t0, tf);
}

}  // namespace

CurvePoint BezierCurve::evaluate(double t) const {
  if (!(tf > t0)) throw DomainError("Bezier window must have tf > t0");
  t = checked_time(t, t0, tf, "Bezier curve");
  const double span = tf - t0;
  const double s = (t - t0) / span;
  CurvePoint out;
  if (s == 0.0) {
    out.position = points[0];
  } else if (s == 1.0) {
    out.position = points[7];
  } else {
    const auto b7 = bernstein(s, kBinom7);
    for (int i = 0; i < 8; ++i) out.position += b7[i] * points[i];
  }
  const auto b6 = bernstein(s, kBinom6);
  for (int i = 0; i < 7; ++i) out.velocity += b6[i] * (points[i + 1] - points[i]);
  out.velocity *= 7.0 / span;
  const auto b5 = bernstein(s, kBinom5);
  for (int i = 0; i < 6; ++i) {
    out.acceleration += b5[i] * (points[i + 2] - 2.0 * points[i + 1] + points[i]);
  }
  out.acceleration *= 42.0 / (span * span);
  return out;
}

BezierCurve boundary_constrained_curve(const Vec3& start, const Vec3& target, double t0,
                                       double tf, const Vec3& a3, const Vec3& a4) {
  if (!(tf > t0)) throw DomainError("swing window must have tf > t0");
  BezierCurve c;
  c.t0 = t0;
  c.tf = tf;
  c.points = {start, start, start, a3, a4, target, target, target};
  return c;
}

QuinticSegment::QuinticSegment(const CurvePoint& from, const CurvePoint& to, double duration)
    : end_(to.position), duration_(duration) {
  if (!(duration > 0.0)) throw DomainError("quintic segment needs a positive duration");
  const double T = duration;
  const Vec3 dp = to.position - from.position;
  const Vec3& v0 = from.velocity;
  const Vec3& v1 = to.velocity;
  const Vec3& a0 = from.acceleration;
  const Vec3& a1 = to.acceleration;
  c_[0] = from.position;
  c_[1] = v0;
  c_[2] = 0.5 * a0;
  c_[3] = (20.0 * dp - (8.0 * v1 + 12.0 * v0) * T - (3.0 * a0 - a1) * T * T) / (2.0 * T * T * T);
  c_[4] = (-30.0 * dp + (14.0 * v1 + 16.0 * v0) * T + (3.0 * a0 - 2.0 * a1) * T * T) /
          (2.0 * T * T * T * T);
  c_[5] = (12.0 * dp - 6.0 * (v1 + v0) * T + (a1 - a0) * T * T) / (2.0 * T * T * T * T * T);
}

CurvePoint QuinticSegment::evaluate(double tau) const {
  tau = std::clamp(tau, 0.0, duration_);
  CurvePoint out;
  if (tau == duration_) {
    out.position = end_;
  } else {
    out.position = c_[0] + tau * (c_[1] + tau * (c_[2] + tau * (c_[3] + tau * (c_[4] + tau * c_[5]))));
  }
  out.velocity = c_[1] + tau * (2.0 * c_[2] + tau * (3.0 * c_[3] + tau * (4.0 * c_[4] + tau * 5.0 * c_[5])));
  out.acceleration = 2.0 * c_[2] + tau * (6.0 * c_[3] + tau * (12.0 * c_[4] + tau * 20.0 * c_[5]));
  return out;
}

CurvePoint ViaPointSpline::evaluate(double t) const {
  t = checked_time(t, t0, tf, "via-point spline");
  const double mid = t0 + rise.duration();
  if (t <= mid) return rise.evaluate(t - t0);
  return fall.evaluate(t - mid);
}

ViaPointSpline make_via_point_spline(const Vec3& start, const Vec3& target, double height,
                                     const Vec3& up, double t0, double tf) {
  if (!(tf > t0)) throw DomainError("swing window must have tf > t0");
  ViaPointSpline s;
  s.start = start;
  s.target = target;
  s.t0 = t0;
  s.tf = tf;
  const Vec3 n = up.normalized();
  const double T = tf - t0;
  const Vec3 chord = target - start;
  s.apex = start + 0.5 * chord + height * n;
  // Chord-wise the two halves reproduce one minimum-jerk quintic, so the apex
  // carries its mid-point velocity and zero acceleration.
  CurvePoint a;
  a.position = s.apex;
  a.velocity = 1.875 * chord / T;
  CurvePoint p0;
  p0.position = start;
  CurvePoint p1;
  p1.position = target;
  s.rise = QuinticSegment(p0, a, 0.5 * T);
  s.fall = QuinticSegment(a, p1, 0.5 * T);
  return s;
}

CurvePoint evaluate(const SwingPath& path, double t) {
  return std::visit([t](const auto& p) { return p.evaluate(t); }, path);
}

double path_start_time(const SwingPath& path) {
  return std::visit([](const auto& p) { return p.t0; }, path);
}

double path_end_time(const SwingPath& path) {
  return std::visit([](const auto& p) { return p.tf; }, path);
}

double height_above_chord(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& up) {
  const Vec3 n = up.normalized();
  const Vec3 d = b - a;
  const Vec3 dh = d - d.dot(n) * n;
  const double len2 = dh.squaredNorm();
  double s = 0.0;
  if (len2 > 1e-24) s = std::clamp((p - a).dot(dh) / len2, 0.0, 1.0);
  return (p - a).dot(n) - s * d.dot(n);
}

CurvePoint SwingPlan::evaluate(double t) const {
  const double slack = 1e-12 * std::max(1.0, std::abs(t_end));
  if (t < t_begin - slack || t > t_end + slack) {
    throw DomainError("swing plan evaluated outside its window");
  }
  const double pb = path_begin();
  const double pe = path_end();
  const Vec3 n = up.normalized();
  if (t < pb) {
    CurvePoint from, to;
    from.position = start_grasp;
    to.position = start_grasp + release_height * n;
    return QuinticSegment(from, to, pb - t_begin).evaluate(t - t_begin);
  }
  if (t > pe) {
    CurvePoint from, to;
    from.position = target_grasp + grasp_height * n;
    to.position = target_grasp;
    return QuinticSegment(from, to, t_end - pe).evaluate(t - pe);
  }
  return ramp::evaluate(path, t);
}

}  // namespace ramp
