#include "dfloc/eval.hpp"

#include <cmath>
#include <numeric>

namespace dfloc {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) {
    throw Error(ErrorCode::kLengthMismatch, "trajectory lengths differ: " + std::to_string(a) +
                                                " vs " + std::to_string(b));
  }
}

void check_timestamps(std::span<const TrajectoryRow> est, std::span<const TrajectoryRow> gt) {
  check_lengths(est.size(), gt.size());
  for (std::size_t i = 0; i < est.size(); ++i) {
    if (std::abs(est[i].timestamp - gt[i].timestamp) > 1e-6) {
      throw Error(ErrorCode::kLengthMismatch,
                  "timestamps differ at row " + std::to_string(i));
    }
  }
}

ErrorStats rms_and_dev(const std::vector<double>& errors) {
  if (errors.empty()) return {};
  double sq = 0.0;
  for (double e : errors) sq += e * e;
  const double n = static_cast<double>(errors.size());
  ErrorStats out;
  out.rmse = std::sqrt(sq / n);
  out.dev = mean_and_dev(errors).dev;
  return out;
}

std::vector<Pose4> poses_of(std::span<const TrajectoryRow> rows) {
  std::vector<Pose4> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.pose);
  return out;
}

}  // namespace

MeanDev mean_and_dev(std::span<const double> values) {
  if (values.empty()) return {};
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  return {mean, std::sqrt(var / n)};
}

ErrorStats rmse_translation(std::span<const Pose4> est, std::span<const Pose4> gt) {
  check_lengths(est.size(), gt.size());
  std::vector<double> errors(est.size());
  for (std::size_t i = 0; i < est.size(); ++i) errors[i] = (est[i].t - gt[i].t).norm();
  return rms_and_dev(errors);
}

ErrorStats rmse_yaw(std::span<const Pose4> est, std::span<const Pose4> gt) {
  check_lengths(est.size(), gt.size());
  std::vector<double> errors(est.size());
  for (std::size_t i = 0; i < est.size(); ++i) {
    errors[i] = std::abs(wrap_angle(est[i].yaw - gt[i].yaw));
  }
  return rms_and_dev(errors);
}

ErrorStats rmse_translation(std::span<const TrajectoryRow> est, std::span<const TrajectoryRow> gt) {
  check_timestamps(est, gt);
  return rmse_translation(poses_of(est), poses_of(gt));
}

ErrorStats rmse_yaw(std::span<const TrajectoryRow> est, std::span<const TrajectoryRow> gt) {
  check_timestamps(est, gt);
  return rmse_yaw(poses_of(est), poses_of(gt));
}

const char* to_string(Method m) { return m == Method::kDll ? "dll" : "icp"; }

const char* to_string(OdomMode m) {
  switch (m) {
    case OdomMode::kBaseline: return "baseline";
    case OdomMode::kNoOdom: return "noodom";
    case OdomMode::kMidNoise: return "midnoise";
    case OdomMode::kLargeNoise: return "largenoise";
  }
  return "unknown";
}

Method parse_method(const std::string& token) {
  if (token == "dll") return Method::kDll;
  if (token == "icp") return Method::kIcp;
  throw Error(ErrorCode::kUnknownToken, "unknown method '" + token + "'");
}

OdomMode parse_mode(const std::string& token) {
  if (token == "baseline") return OdomMode::kBaseline;
  if (token == "noodom") return OdomMode::kNoOdom;
  if (token == "midnoise") return OdomMode::kMidNoise;
  if (token == "largenoise") return OdomMode::kLargeNoise;
  throw Error(ErrorCode::kUnknownToken, "unknown mode '" + token + "'");
}

std::filesystem::path timing_path_for(const std::filesystem::path& path) {
  std::filesystem::path out = path;
  out.replace_extension();
  out += ".timing.csv";
  return out;
}

}  // namespace dfloc
