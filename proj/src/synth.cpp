#include "dfloc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "dfloc/kdtree.hpp"

namespace dfloc {

namespace {

using Rng = std::mt19937_64;

// Distance the path keeps from the faces of the free box.
constexpr double kPathInset = 1.0;
constexpr double kMinClearance = 0.5;

struct Rect3 {
  Point3 lo;
  Point3 hi;
};

// Uniform samples on an axis-aligned planar patch (one extent of hi - lo is zero).
void sample_patch(const Point3& lo, const Point3& hi, double density, Rng& rng,
                  std::vector<Point3>& out) {
  const Point3 span = hi - lo;
  double area = 1.0;
  for (int a = 0; a < 3; ++a) {
    if (span[a] > 0.0) area *= span[a];
  }
  const auto count = static_cast<std::size_t>(std::llround(area * density));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < count; ++i) {
    Point3 p;
    for (int a = 0; a < 3; ++a) p[a] = lo[a] + unit(rng) * span[a];
    out.push_back(p);
  }
}

Scene finish_scene(SceneKind kind, std::vector<Point3> points, const Point3& free_lo,
                   const Point3& free_hi) {
  Scene scene;
  scene.kind = kind;
  scene.map = PointCloud(Frame::kMap, std::move(points));
  scene.lower = scene.map[0];
  scene.upper = scene.map[0];
  for (const auto& p : scene.map) {
    scene.lower = scene.lower.cwiseMin(p);
    scene.upper = scene.upper.cwiseMax(p);
  }
  scene.free_lower = free_lo;
  scene.free_upper = free_hi;
  return scene;
}

Scene make_box_room(double extent, double density, Rng& rng) {
  const Point3 dims(extent, 0.7 * extent, 0.35 * extent);
  std::vector<Point3> pts;
  for (int axis = 0; axis < 3; ++axis) {
    for (double side : {0.0, 1.0}) {
      Point3 lo = Point3::Zero();
      Point3 hi = dims;
      lo[axis] = hi[axis] = side * dims[axis];
      sample_patch(lo, hi, density, rng, pts);
    }
  }
  return finish_scene(SceneKind::kBoxRoom, std::move(pts), Point3::Zero(), dims);
}

Scene make_building_yard(double extent, double density, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n = 4 + static_cast<int>(rng() % 5);
  const Point3 center(extent / 2.0, extent / 2.0, 0.0);
  std::vector<Rect3> buildings;
  for (int k = 0; k < n; ++k) {
    const double angle = 2.0 * std::numbers::pi * k / n + 0.4 * (unit(rng) - 0.5);
    const double radius = 0.36 * extent;
    const double hx = extent * (0.05 + 0.05 * unit(rng));
    const double hy = extent * (0.05 + 0.05 * unit(rng));
    const double height = extent * (0.2 + 0.3 * unit(rng));
    const double cx = std::clamp(center.x() + radius * std::cos(angle), hx, extent - hx);
    const double cy = std::clamp(center.y() + radius * std::sin(angle), hy, extent - hy);
    buildings.push_back({Point3(cx - hx, cy - hy, 0.0), Point3(cx + hx, cy + hy, height)});
  }

  std::vector<Point3> pts;
  // Ground, skipping building footprints.
  const auto ground_count = static_cast<std::size_t>(std::llround(extent * extent * density));
  while (pts.size() < ground_count) {
    const Point3 p(unit(rng) * extent, unit(rng) * extent, 0.0);
    const bool covered = std::any_of(buildings.begin(), buildings.end(), [&](const Rect3& b) {
      return p.x() > b.lo.x() && p.x() < b.hi.x() && p.y() > b.lo.y() && p.y() < b.hi.y();
    });
    if (!covered) pts.push_back(p);
  }
  double half_free = extent / 2.0;
  double min_height = extent;
  for (const auto& b : buildings) {
    for (int axis = 0; axis < 2; ++axis) {
      for (double side : {0.0, 1.0}) {
        Point3 lo = b.lo;
        Point3 hi = b.hi;
        lo[axis] = hi[axis] = side > 0.0 ? b.hi[axis] : b.lo[axis];
        sample_patch(lo, hi, density, rng, pts);
      }
    }
    Point3 roof_lo = b.lo;
    roof_lo.z() = b.hi.z();
    sample_patch(roof_lo, b.hi, density, rng, pts);

    // Chebyshev distance from the yard centre to the footprint.
    const double dx = std::max({b.lo.x() - center.x(), center.x() - b.hi.x(), 0.0});
    const double dy = std::max({b.lo.y() - center.y(), center.y() - b.hi.y(), 0.0});
    half_free = std::min(half_free, std::max(dx, dy));
    min_height = std::min(min_height, b.hi.z());
  }
  const Point3 free_lo(center.x() - half_free, center.y() - half_free, 0.0);
  const Point3 free_hi(center.x() + half_free, center.y() + half_free, min_height);
  return finish_scene(SceneKind::kBuildingYard, std::move(pts), free_lo, free_hi);
}

}  // namespace

const char* to_string(SceneKind kind) {
  return kind == SceneKind::kBoxRoom ? "box_room" : "building_yard";
}

SceneKind parse_scene_kind(const std::string& token) {
  if (token == "box_room") return SceneKind::kBoxRoom;
  if (token == "building_yard") return SceneKind::kBuildingYard;
  throw Error(ErrorCode::kUnknownToken, "unknown scene kind '" + token + "'");
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

Scene make_scene(SceneKind kind, double extent, double density, std::uint64_t seed) {
  if (!(extent > 0.0) || !(density > 0.0)) {
    throw Error(ErrorCode::kInvalidValue, "make_scene: extent and density must be > 0");
  }
  Rng rng(seed);
  return kind == SceneKind::kBoxRoom ? make_box_room(extent, density, rng)
                                     : make_building_yard(extent, density, rng);
}

Scene scene_from_map(PointCloud map) {
  if (map.empty()) throw Error(ErrorCode::kEmptyInput, "scene_from_map: empty map");
  std::vector<Point3> pts = map.points();
  Scene scene = finish_scene(SceneKind::kBoxRoom, std::move(pts), Point3::Zero(), Point3::Zero());
  scene.free_lower = scene.lower;
  scene.free_upper = scene.upper;
  return scene;
}

std::vector<Pose4> make_trajectory(const Scene& scene, std::size_t steps, double step_length,
                                   std::uint64_t seed) {
  if (steps < 2) throw Error(ErrorCode::kInvalidValue, "make_trajectory: steps must be >= 2");
  if (!(step_length > 0.0)) {
    throw Error(ErrorCode::kInvalidValue, "make_trajectory: step_length must be > 0");
  }
  const Point3 half = (scene.free_upper - scene.free_lower) / 2.0;
  const Point3 center = scene.free_lower + half;
  const double rx = half.x() - kPathInset;
  const double ry = half.y() - kPathInset;
  const double rz = std::min(0.3, half.z() - kPathInset);
  if (rx < 0.5 || ry < 0.5 || rz < 0.0) {
    throw Error(ErrorCode::kSceneTooSmall, "scene too small for a trajectory with clearance");
  }

  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double theta = 2.0 * std::numbers::pi * unit(rng);
  const double dir = (rng() & 1) ? 1.0 : -1.0;

  auto position = [&](double th) -> Point3 {
    return Point3(center.x() + rx * std::cos(th), center.y() + ry * std::sin(th),
                  center.z() + rz * std::sin(2.0 * th));
  };
  auto velocity = [&](double th) -> Point3 {
    return Point3(-rx * std::sin(th), ry * std::cos(th), 2.0 * rz * std::cos(2.0 * th)) * dir;
  };

  std::vector<Pose4> poses;
  poses.reserve(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    const Point3 v = velocity(theta);
    poses.emplace_back(position(theta), std::atan2(v.y(), v.x()));
    // Midpoint estimate of the parameter increment for one step of arc length.
    const double half_step = 0.5 * step_length / v.norm();
    theta += dir * step_length / velocity(theta + dir * half_step).norm();
  }

  const KdTree3 index(scene.map);
  for (const auto& pose : poses) {
    if (index.nearest(pose.t).distance < kMinClearance) {
      throw Error(ErrorCode::kSceneTooSmall, "trajectory violates the 0.5 m clearance");
    }
  }
  return poses;
}

std::vector<Attitude> make_attitudes(std::size_t count, double max_tilt, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double phase_r = 2.0 * std::numbers::pi * unit(rng);
  const double phase_p = 2.0 * std::numbers::pi * unit(rng);
  const double rate_r = 0.05 + 0.1 * unit(rng);
  const double rate_p = 0.05 + 0.1 * unit(rng);
  std::vector<Attitude> out(count);
  for (std::size_t k = 0; k < count; ++k) {
    out[k].roll = max_tilt * std::sin(phase_r + rate_r * double(k));
    out[k].pitch = max_tilt * std::sin(phase_p + rate_p * double(k));
  }
  return out;
}

PointCloud simulate_scan(const Scene& scene, const Pose4& pose, const Attitude& attitude,
                         const ScanModel& model, std::uint64_t seed) {
  if (!(model.max_range > 0.0) || model.points == 0 || !(model.noise_sigma >= 0.0) ||
      !(model.outlier_fraction >= 0.0 && model.outlier_fraction <= 1.0)) {
    throw Error(ErrorCode::kInvalidValue, "simulate_scan: invalid scan model");
  }
  const double range2 = model.max_range * model.max_range;
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < scene.map.size(); ++i) {
    if ((scene.map[i] - pose.t).squaredNorm() <= range2) candidates.push_back(i);
  }
  if (candidates.empty()) {
    throw Error(ErrorCode::kNoPointsInRange, "no map points within sensor range");
  }

  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto outliers = static_cast<std::size_t>(
      std::floor(model.outlier_fraction * static_cast<double>(model.points)));
  const std::size_t inliers = model.points - outliers;

  const Eigen::Matrix3d to_sensor = tilt_rotation(attitude).transpose();
  const Pose4 map_to_body = inverse(pose);
  std::vector<Point3> pts;
  pts.reserve(model.points);
  // Without replacement while the candidate pool allows it.
  for (std::size_t k = 0; k < inliers; ++k) {
    const std::size_t n = candidates.size();
    std::size_t pick;
    if (k < n) {
      std::swap(candidates[k], candidates[k + static_cast<std::size_t>(rng() % (n - k))]);
      pick = candidates[k];
    } else {
      pick = candidates[static_cast<std::size_t>(rng() % n)];
    }
    Point3 p = to_sensor * apply_pose(map_to_body, scene.map[pick]);
    if (model.noise_sigma > 0.0) {
      p += model.noise_sigma * Point3(gauss(rng), gauss(rng), gauss(rng));
    }
    pts.push_back(p);
  }
  for (std::size_t k = 0; k < outliers; ++k) {
    // Uniform in the ball of radius max_range.
    Point3 dir(gauss(rng), gauss(rng), gauss(rng));
    while (dir.squaredNorm() < 1e-12) dir = Point3(gauss(rng), gauss(rng), gauss(rng));
    const double r = model.max_range * std::cbrt(unit(rng));
    pts.push_back(r * dir.normalized());
  }
  std::shuffle(pts.begin(), pts.end(), rng);
  return PointCloud(Frame::kSensor, std::move(pts));
}

std::vector<OdomDelta> corrupt_odometry(const std::vector<OdomDelta>& true_deltas,
                                        const NoiseSetup& setup) {
  if (!(setup.sigma_t >= 0.0) || !(setup.sigma_yaw >= 0.0)) {
    throw Error(ErrorCode::kInvalidValue, "corrupt_odometry: sigmas must be >= 0");
  }
  Rng rng(setup.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<OdomDelta> out;
  out.reserve(true_deltas.size());
  for (const auto& d : true_deltas) {
    const double nx = gauss(rng), ny = gauss(rng), nz = gauss(rng), nyaw = gauss(rng);
    out.emplace_back(d.dt.x() + setup.sigma_t * nx, d.dt.y() + setup.sigma_t * ny,
                     d.dt.z() + setup.sigma_t * nz, d.dyaw + setup.sigma_yaw * nyaw);
  }
  return out;
}

std::vector<OdomDelta> odometry_from_trajectory(const std::vector<Pose4>& poses) {
  std::vector<OdomDelta> out;
  out.reserve(poses.size());
  for (std::size_t k = 0; k < poses.size(); ++k) {
    out.push_back(k == 0 ? OdomDelta() : between(poses[k - 1], poses[k]));
  }
  return out;
}

ScenarioRun make_scenario(const SimulationConfig& config, std::uint64_t seed) {
  return make_scenario(make_scene(config.scene, config.extent, config.density, derive_seed(seed, 1)),
                       config, seed);
}

ScenarioRun make_scenario(Scene scene, const SimulationConfig& config, std::uint64_t seed) {
  ScenarioRun run;
  run.scene = std::move(scene);
  run.ground_truth = make_trajectory(run.scene, config.steps, config.step_length,
                                     derive_seed(seed, 2));
  const auto attitudes = make_attitudes(config.steps, config.max_tilt, derive_seed(seed, 3));
  const auto deltas = odometry_from_trajectory(run.ground_truth);
  run.frames.reserve(config.steps);
  for (std::size_t k = 0; k < config.steps; ++k) {
    ScanFrame frame;
    frame.cloud = simulate_scan(run.scene, run.ground_truth[k], attitudes[k], config.scan,
                                derive_seed(seed, 1000 + k));
    frame.attitude = attitudes[k];
    frame.odom = deltas[k];
    frame.timestamp = static_cast<double>(k) * config.frame_period;
    run.frames.push_back(std::move(frame));
  }
  return run;
}

}  // namespace dfloc
