#include "dfloc/geometry.hpp"

#include <string>

namespace dfloc {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kContractViolation: return "contract_violation";
    case ErrorCode::kEmptyInput: return "empty_input";
    case ErrorCode::kBadMagic: return "bad_magic";
    case ErrorCode::kVersionMismatch: return "version_mismatch";
    case ErrorCode::kTruncated: return "truncated";
    case ErrorCode::kDimensionOverflow: return "dimension_overflow";
    case ErrorCode::kParse: return "parse_error";
    case ErrorCode::kNonFinite: return "non_finite";
    case ErrorCode::kHeaderMismatch: return "header_mismatch";
    case ErrorCode::kColumnCount: return "column_count";
    case ErrorCode::kUnknownToken: return "unknown_token";
    case ErrorCode::kUnknownKey: return "unknown_key";
    case ErrorCode::kInvalidValue: return "invalid_value";
    case ErrorCode::kIo: return "io_error";
    case ErrorCode::kUnobservablePose: return "unobservable_pose";
    case ErrorCode::kNoCorrespondences: return "no_correspondences";
    case ErrorCode::kNumericalFailure: return "numerical_failure";
    case ErrorCode::kSceneTooSmall: return "scene_too_small";
    case ErrorCode::kNoPointsInRange: return "no_points_in_range";
    case ErrorCode::kLengthMismatch: return "length_mismatch";
    case ErrorCode::kRegistrationFailed: return "registration_failed";
  }
  return "unknown";
}

const char* to_string(Frame frame) {
  switch (frame) {
    case Frame::kSensor: return "sensor";
    case Frame::kBody: return "body";
    case Frame::kMap: return "map";
  }
  return "unknown";
}

PointCloud::PointCloud(Frame frame, std::vector<Point3> points)
    : frame_(frame), points_(std::move(points)) {
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!points_[i].allFinite()) {
      throw Error(ErrorCode::kNonFinite,
                  "non-finite point at index " + std::to_string(i));
    }
  }
}

bool Attitude::compensable() const noexcept {
  constexpr double kHalfPi = std::numbers::pi / 2.0;
  return std::isfinite(roll) && std::isfinite(pitch) && std::abs(roll) < kHalfPi &&
         std::abs(pitch) < kHalfPi;
}

Pose4 compose(const Pose4& prev, const OdomDelta& delta) {
  return Pose4(prev.t + rotate_z(prev.yaw, delta.dt), prev.yaw + delta.dyaw);
}

OdomDelta between(const Pose4& from, const Pose4& to) {
  const Point3 d = rotate_z(-from.yaw, Point3(to.t - from.t));
  return OdomDelta(d.x(), d.y(), d.z(), to.yaw - from.yaw);
}

Eigen::Matrix3d tilt_rotation(const Attitude& att) {
  return (Eigen::AngleAxisd(att.pitch, Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(att.roll, Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

PointCloud tilt_compensate(const PointCloud& cloud, const Attitude& att) {
  if (cloud.frame() != Frame::kSensor) {
    throw Error(ErrorCode::kContractViolation,
                std::string("tilt_compensate expects a sensor-frame cloud, got ") +
                    to_string(cloud.frame()));
  }
  const Eigen::Matrix3d rot = tilt_rotation(att);
  std::vector<Point3> out;
  out.reserve(cloud.size());
  for (const auto& p : cloud) out.emplace_back(rot * p);
  return PointCloud(Frame::kBody, std::move(out));
}

PointCloud transform_cloud(const Pose4& pose, const PointCloud& cloud, Frame target) {
  std::vector<Point3> out;
  out.reserve(cloud.size());
  for (const auto& p : cloud) out.emplace_back(apply_pose(pose, p));
  return PointCloud(target, std::move(out));
}

}  // namespace dfloc
