#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "dfloc/io.hpp"
#include "io_util.hpp"

namespace dfloc {

namespace {

using Setter = std::function<void(RunConfig&, std::string_view)>;

[[noreturn]] void bad_value(const std::string& key, std::string_view value) {
  throw Error(ErrorCode::kParse, "config key '" + key + "': cannot parse '" +
                                     std::string(value) + "'");
}

Setter real(double RunConfig::*field) {
  return [field](RunConfig& c, std::string_view v) {
    if (!detail::parse_double(v, c.*field) || !std::isfinite(c.*field)) {
      throw std::invalid_argument("");
    }
  };
}

template <typename Fn>
Setter real_with(Fn fn) {
  return [fn](RunConfig& c, std::string_view v) {
    double x = 0.0;
    if (!detail::parse_double(v, x) || !std::isfinite(x)) throw std::invalid_argument("");
    fn(c, x);
  };
}

template <typename Int, typename Fn>
Setter integer_with(Fn fn) {
  return [fn](RunConfig& c, std::string_view v) {
    Int x{};
    if (!detail::parse_int(v, x)) throw std::invalid_argument("");
    fn(c, x);
  };
}

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"map.path", [](RunConfig& c, std::string_view v) { c.map_path = std::string(v); }},
      {"grid.resolution", real(&RunConfig::grid_resolution)},
      {"grid.margin", real(&RunConfig::grid_margin)},
      {"solver.max_iterations",
       integer_with<int>([](RunConfig& c, int x) { c.solver.max_iterations = x; })},
      {"solver.param_tolerance",
       real_with([](RunConfig& c, double x) { c.solver.param_tolerance = x; })},
      {"solver.cost_tolerance",
       real_with([](RunConfig& c, double x) { c.solver.cost_tolerance = x; })},
      {"solver.initial_damping",
       real_with([](RunConfig& c, double x) { c.solver.initial_damping = x; })},
      {"solver.damping_up", real_with([](RunConfig& c, double x) { c.solver.damping_up = x; })},
      {"solver.damping_down",
       real_with([](RunConfig& c, double x) { c.solver.damping_down = x; })},
      {"loss.kind",
       [](RunConfig& c, std::string_view v) {
         if (v == "cauchy") c.loss.kind = LossKind::kCauchy;
         else if (v == "none") c.loss.kind = LossKind::kNone;
         else throw std::invalid_argument("");
       }},
      {"loss.scale", real_with([](RunConfig& c, double x) { c.loss.scale = x; })},
      {"icp.max_iterations",
       integer_with<int>([](RunConfig& c, int x) { c.icp.max_iterations = x; })},
      {"icp.max_correspondence_distance",
       real_with([](RunConfig& c, double x) { c.icp.max_correspondence_distance = x; })},
      {"icp.outlier_rejection_threshold",
       real_with([](RunConfig& c, double x) { c.icp.outlier_rejection_threshold = x; })},
      {"icp.convergence_epsilon",
       real_with([](RunConfig& c, double x) { c.icp.convergence_epsilon = x; })},
      {"noise.sigma_t", real_with([](RunConfig& c, double x) { c.noise.sigma_t = x; })},
      {"noise.sigma_yaw", real_with([](RunConfig& c, double x) { c.noise.sigma_yaw = x; })},
      {"noise.seed",
       integer_with<std::uint64_t>([](RunConfig& c, std::uint64_t x) { c.noise.seed = x; })},
      {"seed", integer_with<std::uint64_t>([](RunConfig& c, std::uint64_t x) { c.seed = x; })},
      {"scene.kind",
       [](RunConfig& c, std::string_view v) {
         if (v == "box_room") c.simulation.scene = SceneKind::kBoxRoom;
         else if (v == "building_yard") c.simulation.scene = SceneKind::kBuildingYard;
         else throw std::invalid_argument("");
       }},
      {"scene.extent", real_with([](RunConfig& c, double x) { c.simulation.extent = x; })},
      {"scene.density", real_with([](RunConfig& c, double x) { c.simulation.density = x; })},
      {"trajectory.steps", integer_with<std::size_t>([](RunConfig& c, std::size_t x) {
         c.simulation.steps = x;
       })},
      {"trajectory.step_length",
       real_with([](RunConfig& c, double x) { c.simulation.step_length = x; })},
      {"trajectory.frame_period",
       real_with([](RunConfig& c, double x) { c.simulation.frame_period = x; })},
      {"trajectory.max_tilt",
       real_with([](RunConfig& c, double x) { c.simulation.max_tilt = x; })},
      {"scan.points", integer_with<std::size_t>([](RunConfig& c, std::size_t x) {
         c.simulation.scan.points = x;
       })},
      {"scan.max_range", real_with([](RunConfig& c, double x) { c.simulation.scan.max_range = x; })},
      {"scan.noise_sigma",
       real_with([](RunConfig& c, double x) { c.simulation.scan.noise_sigma = x; })},
      {"scan.outlier_fraction",
       real_with([](RunConfig& c, double x) { c.simulation.scan.outlier_fraction = x; })},
  };
  return table;
}

void check(bool ok, const char* key, const char* rule) {
  if (!ok) {
    throw Error(ErrorCode::kInvalidValue, std::string("config key '") + key + "' " + rule);
  }
}

void validate(const RunConfig& c) {
  check(c.grid_resolution > 0.0, "grid.resolution", "must be > 0");
  check(c.grid_margin >= 0.0, "grid.margin", "must be >= 0");
  check(c.solver.max_iterations >= 1, "solver.max_iterations", "must be >= 1");
  check(c.solver.param_tolerance > 0.0, "solver.param_tolerance", "must be > 0");
  check(c.solver.cost_tolerance > 0.0, "solver.cost_tolerance", "must be > 0");
  check(c.solver.initial_damping > 0.0, "solver.initial_damping", "must be > 0");
  check(c.solver.damping_up > 1.0, "solver.damping_up", "must be > 1");
  check(c.solver.damping_down > 0.0 && c.solver.damping_down < 1.0, "solver.damping_down",
        "must be in (0, 1)");
  check(c.loss.kind == LossKind::kNone || c.loss.scale > 0.0, "loss.scale", "must be > 0");
  check(c.icp.max_iterations >= 1, "icp.max_iterations", "must be >= 1");
  check(c.icp.max_correspondence_distance > 0.0, "icp.max_correspondence_distance",
        "must be > 0");
  check(c.icp.outlier_rejection_threshold > 0.0, "icp.outlier_rejection_threshold",
        "must be > 0");
  check(c.icp.convergence_epsilon > 0.0, "icp.convergence_epsilon", "must be > 0");
  check(c.noise.sigma_t >= 0.0, "noise.sigma_t", "must be >= 0");
  check(c.noise.sigma_yaw >= 0.0, "noise.sigma_yaw", "must be >= 0");
  check(c.simulation.extent > 0.0, "scene.extent", "must be > 0");
  check(c.simulation.density > 0.0, "scene.density", "must be > 0");
  check(c.simulation.steps >= 2, "trajectory.steps", "must be >= 2");
  check(c.simulation.step_length > 0.0, "trajectory.step_length", "must be > 0");
  check(c.simulation.frame_period > 0.0, "trajectory.frame_period", "must be > 0");
  check(c.simulation.max_tilt >= 0.0 && c.simulation.max_tilt < 1.5, "trajectory.max_tilt",
        "must be in [0, 1.5)");
  check(c.simulation.scan.points >= 1, "scan.points", "must be >= 1");
  check(c.simulation.scan.max_range > 0.0, "scan.max_range", "must be > 0");
  check(c.simulation.scan.noise_sigma >= 0.0, "scan.noise_sigma", "must be >= 0");
  check(c.simulation.scan.outlier_fraction >= 0.0 && c.simulation.scan.outlier_fraction <= 1.0,
        "scan.outlier_fraction", "must be in [0, 1]");
}

}  // namespace

RunConfig parse_config(std::string_view text) {
  RunConfig config;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    const auto raw = text.substr(start, end == std::string_view::npos ? end : end - start);
    start = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    const auto line = detail::trim(detail::strip_comment(raw));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::kParse,
                  "config line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key(detail::trim(line.substr(0, eq)));
    const auto value = detail::trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) {
      throw Error(ErrorCode::kUnknownKey, "unknown config key '" + key + "'");
    }
    try {
      it->second(config, value);
    } catch (const std::invalid_argument&) {
      bad_value(key, value);
    }
  }
  validate(config);
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace dfloc
