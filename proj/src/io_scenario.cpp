#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "dfloc/io.hpp"
#include "io_util.hpp"

namespace dfloc {

namespace {

constexpr int kScenarioVersion = 1;
constexpr std::string_view kOdometryHeader = "step,dtx,dty,dtz,dyaw";

std::string exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::filesystem::path scan_path(const std::filesystem::path& dir, std::size_t k) {
  char name[32];
  std::snprintf(name, sizeof(name), "%06zu.bin", k);
  return dir / "scans" / name;
}

std::map<std::string, std::string> read_kv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto body = detail::trim(detail::strip_comment(line));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::kParse, path.string() + ": expected key=value");
    }
    kv.emplace(std::string(detail::trim(body.substr(0, eq))),
               std::string(detail::trim(body.substr(eq + 1))));
  }
  return kv;
}

double kv_double(const std::map<std::string, std::string>& kv, const std::string& key) {
  const auto it = kv.find(key);
  double v = 0.0;
  if (it == kv.end() || !detail::parse_double(it->second, v)) {
    throw Error(ErrorCode::kParse, "scenario metadata: missing or bad '" + key + "'");
  }
  return v;
}

std::uint64_t kv_u64(const std::map<std::string, std::string>& kv, const std::string& key) {
  const auto it = kv.find(key);
  std::uint64_t v = 0;
  if (it == kv.end() || !detail::parse_int(it->second, v)) {
    throw Error(ErrorCode::kParse, "scenario metadata: missing or bad '" + key + "'");
  }
  return v;
}

}  // namespace

std::vector<TrajectoryRow> ground_truth_rows(const ScenarioRun& run) {
  std::vector<TrajectoryRow> rows;
  rows.reserve(run.frames.size());
  for (std::size_t k = 0; k < run.frames.size(); ++k) {
    rows.push_back({run.frames[k].timestamp, run.ground_truth[k], run.frames[k].attitude,
                    TrajectorySource::kGroundTruth});
  }
  return rows;
}

void write_scenario(const ScenarioRun& run, const std::filesystem::path& dir) {
  if (run.ground_truth.size() != run.frames.size()) {
    throw Error(ErrorCode::kLengthMismatch, "scenario: ground truth and frames differ in length");
  }
  std::filesystem::create_directories(dir / "scans");
  {
    std::ofstream meta(dir / "scenario.txt", std::ios::trunc);
    if (!meta) throw Error(ErrorCode::kIo, "cannot write scenario metadata in " + dir.string());
    meta << "version=" << kScenarioVersion << '\n'
         << "frames=" << run.frames.size() << '\n'
         << "scene.kind=" << to_string(run.scene.kind) << '\n';
    const char* axes = "xyz";
    for (int a = 0; a < 3; ++a) {
      meta << "scene.free_lower." << axes[a] << '=' << exact(run.scene.free_lower[a]) << '\n'
           << "scene.free_upper." << axes[a] << '=' << exact(run.scene.free_upper[a]) << '\n';
    }
    meta << "noise.sigma_t=" << exact(run.noise.sigma_t) << '\n'
         << "noise.sigma_yaw=" << exact(run.noise.sigma_yaw) << '\n'
         << "noise.seed=" << run.noise.seed << '\n';
  }
  write_cloud_binary(run.scene.map, dir / "map.bin");
  write_trajectory(ground_truth_rows(run), dir / "ground_truth.csv");
  {
    std::ofstream odo(dir / "odometry.csv", std::ios::trunc);
    odo << kOdometryHeader << '\n';
    for (std::size_t k = 0; k < run.frames.size(); ++k) {
      const OdomDelta d = run.frames[k].odom.value_or(OdomDelta());
      odo << k << ',' << exact(d.dt.x()) << ',' << exact(d.dt.y()) << ',' << exact(d.dt.z())
          << ',' << exact(d.dyaw) << '\n';
    }
    if (!odo) throw Error(ErrorCode::kIo, "cannot write odometry in " + dir.string());
  }
  for (std::size_t k = 0; k < run.frames.size(); ++k) {
    write_cloud_binary(run.frames[k].cloud, scan_path(dir, k));
  }
}

ScenarioRun read_scenario(const std::filesystem::path& dir) {
  const auto kv = read_kv(dir / "scenario.txt");
  if (kv_u64(kv, "version") != kScenarioVersion) {
    throw Error(ErrorCode::kVersionMismatch, "unsupported scenario version in " + dir.string());
  }
  const std::size_t frames = kv_u64(kv, "frames");

  ScenarioRun run;
  Scene scene = scene_from_map(read_cloud(dir / "map.bin", Frame::kMap));
  scene.kind = parse_scene_kind(kv.count("scene.kind") ? kv.at("scene.kind") : "");
  const char* axes = "xyz";
  for (int a = 0; a < 3; ++a) {
    scene.free_lower[a] = kv_double(kv, std::string("scene.free_lower.") + axes[a]);
    scene.free_upper[a] = kv_double(kv, std::string("scene.free_upper.") + axes[a]);
  }
  run.scene = std::move(scene);
  run.noise.sigma_t = kv_double(kv, "noise.sigma_t");
  run.noise.sigma_yaw = kv_double(kv, "noise.sigma_yaw");
  run.noise.seed = kv_u64(kv, "noise.seed");

  const auto gt = read_trajectory(dir / "ground_truth.csv");
  if (gt.size() != frames) {
    throw Error(ErrorCode::kLengthMismatch, "ground_truth.csv row count differs from metadata");
  }

  std::vector<OdomDelta> deltas;
  {
    std::ifstream odo(dir / "odometry.csv");
    if (!odo) throw Error(ErrorCode::kIo, "cannot open odometry.csv in " + dir.string());
    std::string line;
    if (!std::getline(odo, line) || detail::trim(line) != kOdometryHeader) {
      throw Error(ErrorCode::kHeaderMismatch, "odometry.csv: unexpected header");
    }
    while (std::getline(odo, line)) {
      const auto body = detail::trim(line);
      if (body.empty()) continue;
      const auto cols = detail::split(body, ',');
      if (cols.size() != 5) throw Error(ErrorCode::kColumnCount, "odometry.csv: expected 5 columns");
      double v[4];
      for (int c = 0; c < 4; ++c) {
        if (!detail::parse_double(cols[c + 1], v[c]) || !std::isfinite(v[c])) {
          throw Error(ErrorCode::kParse, "odometry.csv: bad value '" + std::string(cols[c + 1]) + "'");
        }
      }
      deltas.emplace_back(v[0], v[1], v[2], v[3]);
    }
  }
  if (deltas.size() != frames) {
    throw Error(ErrorCode::kLengthMismatch, "odometry.csv row count differs from metadata");
  }

  for (std::size_t k = 0; k < frames; ++k) {
    ScanFrame frame;
    frame.cloud = read_cloud(scan_path(dir, k), Frame::kSensor);
    frame.attitude = gt[k].attitude;
    frame.odom = deltas[k];
    frame.timestamp = gt[k].timestamp;
    run.ground_truth.push_back(gt[k].pose);
    run.frames.push_back(std::move(frame));
  }
  return run;
}

}  // namespace dfloc
