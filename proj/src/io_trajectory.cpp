#include <fstream>

#include "dfloc/io.hpp"
#include "io_util.hpp"

namespace dfloc {

const char* to_string(TrajectorySource source) {
  switch (source) {
    case TrajectorySource::kGroundTruth: return "ground_truth";
    case TrajectorySource::kOdometry: return "odometry";
    case TrajectorySource::kEstimate: return "estimate";
  }
  return "unknown";
}

namespace {

TrajectorySource parse_source(std::string_view token, const std::string& where) {
  token = detail::trim(token);
  if (token == "ground_truth") return TrajectorySource::kGroundTruth;
  if (token == "odometry") return TrajectorySource::kOdometry;
  if (token == "estimate") return TrajectorySource::kEstimate;
  throw Error(ErrorCode::kUnknownToken, where + ": unknown source '" + std::string(token) + "'");
}

}  // namespace

void write_trajectory(const std::vector<TrajectoryRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open for writing: " + path.string());
  out << kTrajectoryHeader << '\n';
  for (const auto& r : rows) {
    out << detail::fixed9(r.timestamp) << ',' << detail::fixed9(r.pose.t.x()) << ','
        << detail::fixed9(r.pose.t.y()) << ',' << detail::fixed9(r.pose.t.z()) << ','
        << detail::fixed9(r.attitude.roll) << ',' << detail::fixed9(r.attitude.pitch) << ','
        << detail::fixed9(r.pose.yaw) << ',' << to_string(r.source) << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

std::vector<TrajectoryRow> read_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open trajectory: " + path.string());
  const std::string name = path.string();
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != kTrajectoryHeader) {
    throw Error(ErrorCode::kHeaderMismatch,
                name + ": expected header '" + std::string(kTrajectoryHeader) + "'");
  }
  std::vector<TrajectoryRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = detail::trim(line);
    if (body.empty()) continue;
    const std::string where = name + ": line " + std::to_string(line_no);
    const auto cols = detail::split(body, ',');
    if (cols.size() != 8) {
      throw Error(ErrorCode::kColumnCount,
                  where + ": expected 8 columns, got " + std::to_string(cols.size()));
    }
    double v[7];
    for (int c = 0; c < 7; ++c) {
      if (!detail::parse_double(cols[c], v[c])) {
        throw Error(ErrorCode::kParse, where + ": cannot parse '" + std::string(cols[c]) + "'");
      }
      if (!std::isfinite(v[c])) throw Error(ErrorCode::kNonFinite, where + ": non-finite value");
    }
    TrajectoryRow row;
    row.timestamp = v[0];
    row.pose = Pose4(v[1], v[2], v[3], v[6]);
    row.attitude = {v[4], v[5]};
    row.source = parse_source(cols[7], where);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace dfloc
