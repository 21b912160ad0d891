#pragma once

#include <span>

#include "dfloc/distance_field.hpp"
#include "dfloc/kdtree.hpp"
#include "dfloc/solver.hpp"

namespace dfloc {

struct RegistrationResult {
  Pose4 pose;
  SolveReport report;
  double elapsed = 0.0;  ///< seconds spent inside the registrar
  std::size_t points_used = 0;
  /// Points that did not contribute at the final pose: outside the grid for
  /// DF registration, rejected correspondences for ICP.
  std::size_t points_out_of_map = 0;
};

struct IcpOptions {
  int max_iterations = 50;
  double max_correspondence_distance = 0.1;
  double outlier_rejection_threshold = 1.0;
  double convergence_epsilon = 1e-6;

  void validate() const;
};

/// Residual r_i = DF(T p_i) with Jacobian gradient^T [I | dR/dyaw p_i].
/// Points outside the grid yield a zero residual and a zero row.
class DfResidualProvider {
 public:
  DfResidualProvider(const PointCloud& body_cloud, const DfGrid& grid)
      : cloud_(body_cloud), grid_(grid) {}

  void evaluate(const Pose4& pose, Residuals& r, Jacobian& j) const;
  std::size_t count_inside(const Pose4& pose) const;

 private:
  const PointCloud& cloud_;
  const DfGrid& grid_;
};

/// Aligns a tilt-compensated cloud to the map by minimising the robust sum of
/// squared interpolated distances, starting from `guess`.
/// Throws kUnobservablePose when no point lands inside the grid and
/// kNumericalFailure when the solver breaks down.
RegistrationResult dll_register(const PointCloud& cloud, const DfGrid& grid, const Pose4& guess,
                                const RobustLoss& loss = RobustLoss::Cauchy(),
                                const SolverOptions& opts = {});

/// Weighted closed-form 4-DOF alignment: yaw from the 2D Procrustes problem on
/// x-y, translation from the weighted centroids. Returns T with T src ~ dst.
Pose4 align_4dof(std::span<const Point3> src, std::span<const Point3> dst,
                 std::span<const double> weights);

/// Point-to-point ICP restricted to [tx, ty, tz, yaw]. Throws
/// kNoCorrespondences when an iteration finds no usable pair.
RegistrationResult icp_register(const PointCloud& cloud, const KdTree3& map_index,
                                const Pose4& guess, const IcpOptions& opts = {});

}  // namespace dfloc
