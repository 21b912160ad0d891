#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dfloc/registration.hpp"
#include "dfloc/synth.hpp"

namespace dfloc {

// ---------------------------------------------------------------------------
// Point clouds
//
// ASCII XYZ: one "x y z" triple per line, '#' starts a comment.
// Binary: 8-byte magic "DFLOCCLD", u64 count, count * 3 little-endian f32.
// read_cloud sniffs the magic and falls back to ASCII.

PointCloud read_cloud(const std::filesystem::path& path, Frame frame = Frame::kMap);
void write_cloud_xyz(const PointCloud& cloud, const std::filesystem::path& path);
void write_cloud_binary(const PointCloud& cloud, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Trajectories

enum class TrajectorySource { kGroundTruth, kOdometry, kEstimate };

const char* to_string(TrajectorySource source);

struct TrajectoryRow {
  double timestamp = 0.0;
  Pose4 pose;
  Attitude attitude;
  TrajectorySource source = TrajectorySource::kEstimate;
};

inline constexpr std::string_view kTrajectoryHeader = "t,tx,ty,tz,roll,pitch,yaw,source";

/// CSV with the fixed header above; values printed with 9 decimals.
void write_trajectory(const std::vector<TrajectoryRow>& rows, const std::filesystem::path& path);
std::vector<TrajectoryRow> read_trajectory(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Run configuration: flat key=value text, '#' comments. Keys are listed in
// FORMATS.md; absent keys keep their defaults.

struct RunConfig {
  std::string map_path;
  double grid_resolution = 0.05;
  double grid_margin = 1.0;
  SolverOptions solver;
  RobustLoss loss = RobustLoss::Cauchy(0.1);
  IcpOptions icp;
  NoiseSetup noise;
  std::uint64_t seed = 0;
  SimulationConfig simulation;
};

RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Scenario bundle: a directory holding
//   scenario.txt       metadata (key=value)
//   map.bin            binary map cloud
//   ground_truth.csv   trajectory CSV; roll/pitch carry the IMU attitude
//   odometry.csv       noiseless body-frame increments
//   scans/NNNNNN.bin   binary sensor-frame clouds

void write_scenario(const ScenarioRun& run, const std::filesystem::path& dir);
ScenarioRun read_scenario(const std::filesystem::path& dir);

/// Ground-truth rows for a scenario, one per frame.
std::vector<TrajectoryRow> ground_truth_rows(const ScenarioRun& run);

}  // namespace dfloc
