#include "dfloc/tracker.hpp"

#include <string>

namespace dfloc {

TrackerState init_tracker(const Pose4& initial_pose) {
  if (!initial_pose.allFinite()) {
    throw Error(ErrorCode::kNonFinite, "init_tracker: non-finite initial pose");
  }
  TrackerState state;
  state.current_pose = initial_pose;
  return state;
}

TrackerState track_step(const TrackerState& state, const ScanFrame& frame,
                        const Registrar& registrar) {
  const std::size_t step = state.step_index;
  auto fail = [step](ErrorCode cause, const std::string& what) {
    return TrackingError(step, cause, "step " + std::to_string(step) + ": " + what);
  };
  if (!frame.attitude.compensable()) {
    throw fail(ErrorCode::kContractViolation, "attitude outside the tilt-compensable range");
  }
  const Pose4 guess = frame.odom ? compose(state.current_pose, *frame.odom) : state.current_pose;

  RegistrationResult result;
  try {
    result = registrar(tilt_compensate(frame.cloud, frame.attitude), guess);
  } catch (const Error& e) {
    throw fail(e.code(), e.what());
  }
  if (!result.pose.allFinite()) throw fail(ErrorCode::kNonFinite, "registration returned a non-finite pose");

  TrackerState next;
  next.current_pose = result.pose;
  next.last_result = std::move(result);
  next.step_index = step + 1;
  return next;
}

Registrar make_dll_registrar(const DfGrid& grid, const RobustLoss& loss,
                             const SolverOptions& opts) {
  return [&grid, loss, opts](const PointCloud& cloud, const Pose4& guess) {
    return dll_register(cloud, grid, guess, loss, opts);
  };
}

Registrar make_icp_registrar(const KdTree3& index, const IcpOptions& opts) {
  return [&index, opts](const PointCloud& cloud, const Pose4& guess) {
    return icp_register(cloud, index, guess, opts);
  };
}

TrackerState track_step(const TrackerState& state, const ScanFrame& frame, const DfGrid& grid,
                        const RobustLoss& loss, const SolverOptions& opts) {
  return track_step(state, frame, make_dll_registrar(grid, loss, opts));
}

}  // namespace dfloc
