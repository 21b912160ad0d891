#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <numbers>
#include <vector>

#include "dfloc/error.hpp"

namespace dfloc {

template <typename Scalar>
using Point3T = Eigen::Matrix<Scalar, 3, 1>;
using Point3 = Point3T<double>;

enum class Frame { kSensor, kBody, kMap };

const char* to_string(Frame frame);

/// Wraps an angle to (-pi, pi].
template <typename Scalar>
Scalar wrap_angle(Scalar angle) {
  constexpr Scalar kPi = std::numbers::pi_v<Scalar>;
  Scalar wrapped = std::remainder(angle, Scalar(2) * kPi);
  if (wrapped <= -kPi) wrapped += Scalar(2) * kPi;
  return wrapped;
}

/// Ordered set of finite points tagged with the frame they are expressed in.
/// The frame is fixed at construction.
class PointCloud {
 public:
  explicit PointCloud(Frame frame) : frame_(frame) {}
  PointCloud(Frame frame, std::vector<Point3> points);

  Frame frame() const noexcept { return frame_; }
  const std::vector<Point3>& points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }
  const Point3& operator[](std::size_t i) const { return points_[i]; }

  auto begin() const noexcept { return points_.begin(); }
  auto end() const noexcept { return points_.end(); }

 private:
  Frame frame_;
  std::vector<Point3> points_;
};

/// IMU-provided roll and pitch used for tilt compensation.
struct Attitude {
  double roll = 0.0;
  double pitch = 0.0;

  /// True when both angles lie strictly inside (-pi/2, pi/2).
  bool compensable() const noexcept;
};

/// Four degree-of-freedom pose: translation plus yaw about the map z axis.
template <typename Scalar>
struct Pose4T {
  Point3T<Scalar> t = Point3T<Scalar>::Zero();
  Scalar yaw = Scalar(0);

  Pose4T() = default;
  Pose4T(Scalar tx, Scalar ty, Scalar tz, Scalar yaw_rad)
      : t(tx, ty, tz), yaw(wrap_angle(yaw_rad)) {}
  Pose4T(const Point3T<Scalar>& translation, Scalar yaw_rad)
      : t(translation), yaw(wrap_angle(yaw_rad)) {}

  static Pose4T Identity() { return Pose4T(); }

  /// Parameter vector in the fixed order [tx, ty, tz, yaw].
  Eigen::Matrix<Scalar, 4, 1> params() const {
    return {t.x(), t.y(), t.z(), yaw};
  }
  static Pose4T FromParams(const Eigen::Matrix<Scalar, 4, 1>& v) {
    return Pose4T(v[0], v[1], v[2], v[3]);
  }

  bool allFinite() const { return t.allFinite() && std::isfinite(yaw); }
};
using Pose4 = Pose4T<double>;

/// Body-frame increment between two consecutive registrations.
struct OdomDelta {
  Point3 dt = Point3::Zero();
  double dyaw = 0.0;

  OdomDelta() = default;
  OdomDelta(double dtx, double dty, double dtz, double dyaw_rad)
      : dt(dtx, dty, dtz), dyaw(wrap_angle(dyaw_rad)) {}
};

template <typename Scalar>
Point3T<Scalar> rotate_z(Scalar yaw, const Point3T<Scalar>& p) {
  const Scalar c = std::cos(yaw);
  const Scalar s = std::sin(yaw);
  return {c * p.x() - s * p.y(), s * p.x() + c * p.y(), p.z()};
}

/// Partial derivative of rotate_z with respect to yaw.
template <typename Scalar>
Point3T<Scalar> d_rotate_z_dyaw(Scalar yaw, const Point3T<Scalar>& p) {
  const Scalar c = std::cos(yaw);
  const Scalar s = std::sin(yaw);
  return {-s * p.x() - c * p.y(), c * p.x() - s * p.y(), Scalar(0)};
}

template <typename Scalar>
Point3T<Scalar> apply_pose(const Pose4T<Scalar>& pose, const Point3T<Scalar>& p) {
  return rotate_z(pose.yaw, p) + pose.t;
}

template <typename Scalar>
Pose4T<Scalar> inverse(const Pose4T<Scalar>& pose) {
  return Pose4T<Scalar>(-rotate_z(-pose.yaw, pose.t), -pose.yaw);
}

/// Applies a body-frame delta on top of prev.
Pose4 compose(const Pose4& prev, const OdomDelta& delta);

/// The delta d with compose(from, d) == to.
OdomDelta between(const Pose4& from, const Pose4& to);

/// R_y(pitch) * R_x(roll), z-up.
Eigen::Matrix3d tilt_rotation(const Attitude& att);

/// Rotates a sensor-frame cloud into the gravity-aligned body frame.
/// Throws kContractViolation when the cloud is not in the sensor frame.
PointCloud tilt_compensate(const PointCloud& cloud, const Attitude& att);

/// Maps every point through pose; the result is tagged with `target`.
PointCloud transform_cloud(const Pose4& pose, const PointCloud& cloud, Frame target);

}  // namespace dfloc
