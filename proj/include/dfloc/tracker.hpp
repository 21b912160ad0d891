#pragma once

#include <functional>
#include <optional>

#include "dfloc/registration.hpp"

namespace dfloc {

struct ScanFrame {
  PointCloud cloud{Frame::kSensor};
  Attitude attitude;
  std::optional<OdomDelta> odom;  ///< absent: reuse the previous pose as guess
  double timestamp = 0.0;
};

struct TrackerState {
  Pose4 current_pose;
  std::optional<RegistrationResult> last_result;
  std::size_t step_index = 0;
};

/// Scan-to-map registrar used by the tracker: (body cloud, guess) -> result.
using Registrar = std::function<RegistrationResult(const PointCloud&, const Pose4&)>;

TrackerState init_tracker(const Pose4& initial_pose);

/// Predict with odometry, tilt-compensate, register. On failure the input
/// state is left untouched and a TrackingError naming the step is thrown.
TrackerState track_step(const TrackerState& state, const ScanFrame& frame,
                        const Registrar& registrar);

/// Distance-field registrar bound to a grid.
TrackerState track_step(const TrackerState& state, const ScanFrame& frame, const DfGrid& grid,
                        const RobustLoss& loss, const SolverOptions& opts);

Registrar make_dll_registrar(const DfGrid& grid, const RobustLoss& loss,
                             const SolverOptions& opts);
Registrar make_icp_registrar(const KdTree3& index, const IcpOptions& opts);

}  // namespace dfloc
