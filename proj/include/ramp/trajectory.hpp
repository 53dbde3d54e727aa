#pragma once

#include <array>
#include <variant>

#include "ramp/common.hpp"

namespace ramp {

struct CurvePoint {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Vec3 acceleration = Vec3::Zero();
};

/// Degree-7 Bezier curve over the time window [t0, tf].
struct BezierCurve {
  std::array<Vec3, 8> points{};
  double t0 = 0.0;
  double tf = 1.0;

  /// Bernstein evaluation with analytic derivatives. Throws DomainError
  /// outside [t0, tf].
  CurvePoint evaluate(double t) const;
};

/// Rest-to-rest Bezier: a0 = a1 = a2 = start, a5 = a6 = a7 = target,
/// a3 and a4 free.
BezierCurve boundary_constrained_curve(const Vec3& start, const Vec3& target, double t0,
                                       double tf, const Vec3& a3, const Vec3& a4);

/// Quintic segment between two (p, v, a) boundary states.
class QuinticSegment {
 public:
  QuinticSegment() = default;
  QuinticSegment(const CurvePoint& from, const CurvePoint& to, double duration);

  CurvePoint evaluate(double tau) const;   // tau in [0, duration]
  double duration() const { return duration_; }

 private:
  std::array<Vec3, 6> c_{};
  Vec3 end_ = Vec3::Zero();
  double duration_ = 1.0;
};

/// Two C2-joined quintic segments from start through an apex via point to
/// target, at rest at both ends.
struct ViaPointSpline {
  Vec3 start = Vec3::Zero();
  Vec3 apex = Vec3::Zero();
  Vec3 target = Vec3::Zero();
  double t0 = 0.0;
  double tf = 1.0;
  QuinticSegment rise;
  QuinticSegment fall;

  CurvePoint evaluate(double t) const;
};

/// Via-point spline whose apex sits at height h above the chord midpoint
/// (along `up`) and is the highest point of the path.
ViaPointSpline make_via_point_spline(const Vec3& start, const Vec3& target, double height,
                                     const Vec3& up, double t0, double tf);

using SwingPath = std::variant<BezierCurve, ViaPointSpline>;

CurvePoint evaluate(const SwingPath& path, double t);
double path_start_time(const SwingPath& path);
double path_end_time(const SwingPath& path);

/// Height of p above the segment a -> b, measured along `up`.
double height_above_chord(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& up);

/// Complete swing of one limb: vertical release, the swing path and the
/// vertical grasp, over [t_begin, t_end].
struct SwingPlan {
  SwingPath path;
  int limb = 0;
  double release_height = 0.0;
  double grasp_height = 0.0;
  Vec3 start_grasp = Vec3::Zero();
  Vec3 target_grasp = Vec3::Zero();
  Vec3 up = Vec3::UnitZ();
  double t_begin = 0.0;
  double t_end = 1.0;

  double path_begin() const { return path_start_time(path); }
  double path_end() const { return path_end_time(path); }

  /// Composite end-effector reference at time t in [t_begin, t_end].
  CurvePoint evaluate(double t) const;
};

}  // namespace ramp
