#include "dfloc/registration.hpp"

#include <chrono>
#include <string>
#include <vector>

namespace dfloc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  const double s = std::chrono::duration<double>(Clock::now() - start).count();
  return s > 0.0 ? s : std::numeric_limits<double>::min();
}

void require_body_cloud(const PointCloud& cloud, const char* who) {
  if (cloud.frame() != Frame::kBody) {
    throw Error(ErrorCode::kContractViolation,
                std::string(who) + " expects a tilt-compensated body-frame cloud");
  }
  if (cloud.empty()) throw Error(ErrorCode::kEmptyInput, std::string(who) + ": empty cloud");
}

}  // namespace

void IcpOptions::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::kInvalidValue, std::string("icp option ") + what);
  };
  require(max_iterations >= 1, "max_iterations must be >= 1");
  require(max_correspondence_distance > 0.0, "max_correspondence_distance must be > 0");
  require(outlier_rejection_threshold > 0.0, "outlier_rejection_threshold must be > 0");
  require(convergence_epsilon > 0.0, "convergence_epsilon must be > 0");
}

void DfResidualProvider::evaluate(const Pose4& pose, Residuals& r, Jacobian& j) const {
  const auto n = static_cast<Eigen::Index>(cloud_.size());
  r.resize(n);
  j.resize(n, 4);
  const double c = std::cos(pose.yaw);
  const double s = std::sin(pose.yaw);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Point3& p = cloud_[static_cast<std::size_t>(i)];
    const Point3 x(c * p.x() - s * p.y() + pose.t.x(), s * p.x() + c * p.y() + pose.t.y(),
                   p.z() + pose.t.z());
    const DfSample sample = grid_.query(x);
    r[i] = sample.value;
    const Eigen::Vector3d& g = sample.gradient;
    // d(R p)/dyaw = (-s px - c py, c px - s py, 0)
    const double dyaw = g.x() * (-s * p.x() - c * p.y()) + g.y() * (c * p.x() - s * p.y());
    j.row(i) << g.x(), g.y(), g.z(), dyaw;
  }
}

std::size_t DfResidualProvider::count_inside(const Pose4& pose) const {
  std::size_t inside = 0;
  for (const auto& p : cloud_) inside += grid_.contains(apply_pose(pose, p)) ? 1 : 0;
  return inside;
}

RegistrationResult dll_register(const PointCloud& cloud, const DfGrid& grid, const Pose4& guess,
                                const RobustLoss& loss, const SolverOptions& opts) {
  const auto start = Clock::now();
  require_body_cloud(cloud, "dll_register");
  const DfResidualProvider provider(cloud, grid);
  if (provider.count_inside(guess) == 0) {
    throw Error(ErrorCode::kUnobservablePose, "no scan point falls inside the distance field");
  }
  RegistrationResult result;
  result.report = solve_lm(provider, guess, loss, opts);
  if (result.report.termination == Termination::kNumericalFailure) {
    throw Error(ErrorCode::kNumericalFailure, "solver failed on the distance-field objective");
  }
  result.pose = result.report.final_params;
  result.points_used = provider.count_inside(result.pose);
  if (result.points_used == 0) {
    throw Error(ErrorCode::kUnobservablePose, "registration left the distance field");
  }
  result.points_out_of_map = cloud.size() - result.points_used;
  result.elapsed = seconds_since(start);
  return result;
}

Pose4 align_4dof(std::span<const Point3> src, std::span<const Point3> dst,
                 std::span<const double> weights) {
  if (src.size() != dst.size() || src.size() != weights.size()) {
    throw Error(ErrorCode::kLengthMismatch, "align_4dof: mismatched inputs");
  }
  double wsum = 0.0;
  Point3 src_mean = Point3::Zero();
  Point3 dst_mean = Point3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    wsum += weights[i];
    src_mean += weights[i] * src[i];
    dst_mean += weights[i] * dst[i];
  }
  if (!(wsum > 0.0)) {
    throw Error(ErrorCode::kNoCorrespondences, "align_4dof: no weighted correspondences");
  }
  src_mean /= wsum;
  dst_mean /= wsum;
  double sin_acc = 0.0;
  double cos_acc = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const Point3 a = src[i] - src_mean;
    const Point3 b = dst[i] - dst_mean;
    sin_acc += weights[i] * (a.x() * b.y() - a.y() * b.x());
    cos_acc += weights[i] * (a.x() * b.x() + a.y() * b.y());
  }
  const double yaw = std::atan2(sin_acc, cos_acc);
  return Pose4(dst_mean - rotate_z(yaw, src_mean), yaw);
}

RegistrationResult icp_register(const PointCloud& cloud, const KdTree3& map_index,
                                const Pose4& guess, const IcpOptions& opts) {
  const auto start = Clock::now();
  require_body_cloud(cloud, "icp_register");
  opts.validate();

  RegistrationResult result;
  SolveReport& report = result.report;
  Pose4 pose = guess;
  std::vector<Point3> src;
  std::vector<Point3> dst;
  std::vector<double> weights;
  src.reserve(cloud.size());
  dst.reserve(cloud.size());
  weights.reserve(cloud.size());

  bool converged = false;
  while (report.iterations < opts.max_iterations) {
    ++report.iterations;
    src.clear();
    dst.clear();
    weights.clear();
    double sq_sum = 0.0;
    std::size_t used = 0;
    for (const auto& p : cloud) {
      const NearestResult nn = map_index.nearest(apply_pose(pose, p));
      if (nn.distance > opts.max_correspondence_distance) continue;
      const double w = nn.distance > opts.outlier_rejection_threshold ? 0.0 : 1.0;
      src.push_back(p);
      dst.push_back(nn.point);
      weights.push_back(w);
      if (w > 0.0) {
        sq_sum += nn.distance * nn.distance;
        ++used;
      }
    }
    if (used == 0) {
      throw Error(ErrorCode::kNoCorrespondences,
                  "icp: no correspondences in iteration " + std::to_string(report.iterations));
    }
    const double cost = sq_sum / static_cast<double>(used);
    if (report.iterations == 1) report.initial_cost = cost;
    report.final_cost = cost;
    report.accepted_costs.push_back(cost);
    result.points_used = used;

    const Pose4 next = align_4dof(src, dst, weights);
    const double dt = (next.t - pose.t).norm();
    const double dyaw = std::abs(wrap_angle(next.yaw - pose.yaw));
    pose = next;
    if (dt < opts.convergence_epsilon && dyaw < opts.convergence_epsilon) {
      converged = true;
      break;
    }
  }
  report.converged = converged;
  report.termination = converged ? Termination::kParamTol : Termination::kMaxIter;
  report.final_params = pose;
  result.pose = pose;
  result.points_out_of_map = cloud.size() - result.points_used;
  result.elapsed = seconds_since(start);
  return result;
}

}  // namespace dfloc
