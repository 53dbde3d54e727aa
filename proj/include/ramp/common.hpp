#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <limits>
#include <stdexcept>
#include <string>

namespace ramp {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using Quat = Eigen::Quaterniond;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kPi = 3.14159265358979323846;

inline Mat3 skew(const Vec3& w) {
  Mat3 s;
  s << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
       -w.y(), w.x(), 0.0;
  return s;
}

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ModelError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class UnreachableTarget : public Error {
 public:
  using Error::Error;
};

class JointLimitError : public Error {
 public:
  using Error::Error;
};

class InfeasibleTrajectory : public Error {
 public:
  using Error::Error;
};

/// Raised when a limb Jacobian or the effective base inertia loses rank.
/// Carries the plan time (NaN when raised outside a plan) and the offending
/// smallest singular value.
class SingularityError : public Error {
 public:
  SingularityError(const std::string& what, double sigma_min,
                   double time = std::numeric_limits<double>::quiet_NaN())
      : Error(what), sigma_min_(sigma_min), time_(time) {}

  double sigma_min() const { return sigma_min_; }
  double time() const { return time_; }

 private:
  double sigma_min_;
  double time_;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : Error(field.empty() ? what : field + ": " + what), field_(field), message_(what) {}
  const std::string& field() const { return field_; }
  const std::string& message() const { return message_; }

 private:
  std::string field_;
  std::string message_;
};

class NumericalBlowup : public Error {
 public:
  using Error::Error;
};

}  // namespace ramp
