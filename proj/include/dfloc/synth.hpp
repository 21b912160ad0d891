#pragma once

#include <cstdint>
#include <vector>

#include "dfloc/tracker.hpp"

namespace dfloc {

enum class SceneKind { kBoxRoom, kBuildingYard };

const char* to_string(SceneKind kind);
SceneKind parse_scene_kind(const std::string& token);

struct Scene {
  SceneKind kind = SceneKind::kBoxRoom;
  PointCloud map{Frame::kMap};
  Point3 lower = Point3::Zero();  ///< bounds of every map point
  Point3 upper = Point3::Zero();
  Point3 free_lower = Point3::Zero();  ///< obstacle-free box trajectories may use
  Point3 free_upper = Point3::Zero();
};

struct NoiseSetup {
  double sigma_t = 0.0;    ///< meters, per translation axis
  double sigma_yaw = 0.0;  ///< radians
  std::uint64_t seed = 0;

  static NoiseSetup Mid(std::uint64_t seed) { return {0.25, 0.05, seed}; }
  static NoiseSetup Large(std::uint64_t seed) { return {0.5, 0.1, seed}; }
};

struct ScanModel {
  double max_range = 20.0;
  std::size_t points = 2000;
  double noise_sigma = 0.02;
  double outlier_fraction = 0.0;
};

struct SimulationConfig {
  SceneKind scene = SceneKind::kBoxRoom;
  double extent = 10.0;
  double density = 100.0;  ///< points per square meter of surface
  std::size_t steps = 100;
  double step_length = 0.3;
  double frame_period = 0.1;  ///< seconds between scans
  double max_tilt = 0.05;     ///< peak roll/pitch amplitude, radians
  ScanModel scan;
};

struct ScenarioRun {
  Scene scene;
  std::vector<Pose4> ground_truth;
  std::vector<ScanFrame> frames;  ///< odom holds the noiseless increments
  NoiseSetup noise;
};

/// Deterministic 64-bit seed derivation (splitmix64 over seed and stream id).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// box_room: hollow extent x 0.7 extent x 0.35 extent room.
/// building_yard: extent x extent ground plane with cuboid buildings on a ring.
Scene make_scene(SceneKind kind, double extent, double density, std::uint64_t seed);

/// Scene from an existing map; the free box is the map's bounding box.
Scene scene_from_map(PointCloud map);

/// Elliptic loop through the free interior, heading-aligned yaw, with at
/// least 0.5 m clearance to every map point. Throws kSceneTooSmall otherwise.
std::vector<Pose4> make_trajectory(const Scene& scene, std::size_t steps, double step_length,
                                   std::uint64_t seed);

/// Smoothly varying roll/pitch bounded by max_tilt.
std::vector<Attitude> make_attitudes(std::size_t count, double max_tilt, std::uint64_t seed);

/// Range-limited map subsampling expressed in the sensor frame, with Gaussian
/// noise and uniform clutter replacing floor(outlier_fraction * points) points.
PointCloud simulate_scan(const Scene& scene, const Pose4& pose, const Attitude& attitude,
                         const ScanModel& model, std::uint64_t seed);

std::vector<OdomDelta> corrupt_odometry(const std::vector<OdomDelta>& true_deltas,
                                        const NoiseSetup& setup);

/// Noiseless increments between consecutive poses; the first entry is zero.
std::vector<OdomDelta> odometry_from_trajectory(const std::vector<Pose4>& poses);

ScenarioRun make_scenario(const SimulationConfig& config, std::uint64_t seed);

/// Same, over a caller-provided scene.
ScenarioRun make_scenario(Scene scene, const SimulationConfig& config, std::uint64_t seed);

}  // namespace dfloc
