#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dfloc/io.hpp"

namespace dfloc {

struct ErrorStats {
  double rmse = 0.0;
  double dev = 0.0;  ///< population standard deviation of the per-step errors
};

/// RMSE and deviation of the Euclidean translation error. Rows must match in
/// length and timestamps (1e-6 s).
ErrorStats rmse_translation(std::span<const TrajectoryRow> est, std::span<const TrajectoryRow> gt);

/// Same for yaw, with each per-step difference wrapped to (-pi, pi].
ErrorStats rmse_yaw(std::span<const TrajectoryRow> est, std::span<const TrajectoryRow> gt);

ErrorStats rmse_translation(std::span<const Pose4> est, std::span<const Pose4> gt);
ErrorStats rmse_yaw(std::span<const Pose4> est, std::span<const Pose4> gt);

struct MeanDev {
  double mean = 0.0;
  double dev = 0.0;
};

/// Mean and population deviation.
MeanDev mean_and_dev(std::span<const double> values);

enum class Method { kDll, kIcp };
enum class OdomMode { kBaseline, kNoOdom, kMidNoise, kLargeNoise };

const char* to_string(Method m);
const char* to_string(OdomMode m);
Method parse_method(const std::string& token);
OdomMode parse_mode(const std::string& token);

/// Translation error beyond which a run counts as diverged, meters.
inline constexpr double kDivergenceThreshold = 5.0;

struct TrackingRun {
  Method method = Method::kDll;
  OdomMode mode = OdomMode::kBaseline;
  std::vector<TrajectoryRow> estimates;
  std::vector<double> step_seconds;  ///< registration time of each successful step
  std::vector<double> final_costs;   ///< registration final cost per successful step
  std::size_t failures = 0;          ///< steps whose registration threw
  bool diverged = false;
};

struct TrackingContext {
  const DfGrid* grid = nullptr;     ///< required for Method::kDll
  const KdTree3* index = nullptr;   ///< required for Method::kIcp
  RobustLoss loss = RobustLoss::Cauchy();
  SolverOptions solver;
  IcpOptions icp;
};

/// Odometry fed to the tracker under a mode; noise seeds derive from `seed`.
std::vector<std::optional<OdomDelta>> mode_odometry(const ScenarioRun& run, OdomMode mode,
                                                    std::uint64_t seed);

/// Tracks the whole scenario from its first ground-truth pose. Failed steps
/// hold the previous pose; the run stops early once it diverges.
TrackingRun run_tracking(const ScenarioRun& run, Method method, OdomMode mode,
                         const TrackingContext& ctx, std::uint64_t seed);

struct BenchRow {
  Method method = Method::kDll;
  OdomMode mode = OdomMode::kBaseline;
  bool diverged = false;
  std::optional<ErrorStats> rmse_t;  ///< absent when diverged
  std::optional<ErrorStats> rmse_a;
  MeanDev dt;  ///< seconds per registration
  std::size_t steps = 0;
  std::size_t failures = 0;
};

BenchRow summarize(const ScenarioRun& run, const TrackingRun& tracking);

/// Every method x mode pair. `jobs > 1` runs pairs on worker threads; each
/// registration still runs on a single thread and row order is fixed.
std::vector<BenchRow> run_benchmark(const ScenarioRun& run, const TrackingContext& ctx,
                                    std::uint64_t seed, unsigned jobs = 1);

/// Accuracy report: deterministic for a fixed seed.
void write_bench_report(const std::vector<BenchRow>& rows, const std::filesystem::path& path);
/// Wall-clock timing per method and mode.
void write_bench_timing(const std::vector<BenchRow>& rows, const std::filesystem::path& path);

/// Sibling path used for timing output: foo.csv -> foo.timing.csv.
std::filesystem::path timing_path_for(const std::filesystem::path& path);

}  // namespace dfloc
