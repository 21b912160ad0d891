// Command-line front end: offline grid build, scenario simulation,
// localization runs, benchmarking and trajectory evaluation.

#include <cstdio>
#include <fstream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/cfg/env.h>
#include <spdlog/spdlog.h>

#include "dfloc/distance_field.hpp"
#include "dfloc/eval.hpp"
#include "dfloc/io.hpp"

namespace {

using namespace dfloc;

struct StageError : std::runtime_error {
  StageError(std::string stage, const std::string& what)
      : std::runtime_error(what), stage(std::move(stage)) {}
  std::string stage;
};

template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw StageError(name, std::string(to_string(e.code())) + ": " + e.what());
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

RunConfig config_or_default(const std::string& path) {
  if (path.empty()) return RunConfig{};
  return stage("load-config", [&] { return load_config(path); });
}

TrackingContext make_context(const RunConfig& cfg, const DfGrid* grid, const KdTree3* index) {
  TrackingContext ctx;
  ctx.grid = grid;
  ctx.index = index;
  ctx.loss = cfg.loss;
  ctx.solver = cfg.solver;
  ctx.icp = cfg.icp;
  return ctx;
}

void warn_on_volume_mismatch(const DfGrid& grid, const ScenarioRun& run) {
  if (!grid.contains(run.scene.lower) || !grid.contains(run.scene.upper)) {
    spdlog::warn("scenario map extends beyond the grid volume; grid and scenario may not match");
  }
}

int cmd_build_df(const std::string& map_path, double resolution, double margin,
                 const std::string& out) {
  const PointCloud map = stage("read-map", [&] { return read_cloud(map_path, Frame::kMap); });
  const GridSpec spec = stage("plan-grid", [&] { return plan_grid(map, resolution, margin); });
  spdlog::info("building {}x{}x{} cells at {} m", spec.cells[0], spec.cells[1], spec.cells[2],
               spec.resolution);
  const DfGrid grid = stage("build-grid", [&] { return build_grid(map, spec); });
  stage("write-grid", [&] { save_grid(grid, out); });
  std::printf("wrote %s (%zu cells)\n", out.c_str(), spec.cell_count());
  return 0;
}

int cmd_simulate(const std::string& config_path, const std::string& out,
                 std::optional<std::uint64_t> seed) {
  const RunConfig cfg = config_or_default(config_path);
  const std::uint64_t s = seed.value_or(cfg.seed);
  ScenarioRun run = stage("simulate", [&] {
    if (!cfg.map_path.empty()) {
      Scene scene = scene_from_map(read_cloud(cfg.map_path, Frame::kMap));
      return make_scenario(std::move(scene), cfg.simulation, s);
    }
    return make_scenario(cfg.simulation, s);
  });
  run.noise = cfg.noise;
  stage("write-scenario", [&] { write_scenario(run, out); });
  std::printf("wrote scenario %s (%zu frames, %zu map points)\n", out.c_str(), run.frames.size(),
              run.scene.map.size());
  return 0;
}

int cmd_localize(const std::string& grid_path, const std::string& scenario_dir,
                 const std::string& method_name, const std::string& mode_name,
                 const std::string& out, const std::string& config_path, std::uint64_t seed) {
  const RunConfig cfg = config_or_default(config_path);
  const Method method = stage("parse-args", [&] { return parse_method(method_name); });
  const OdomMode mode = stage("parse-args", [&] { return parse_mode(mode_name); });
  const DfGrid grid = stage("load-grid", [&] { return load_grid(grid_path); });
  const ScenarioRun run = stage("load-scenario", [&] { return read_scenario(scenario_dir); });
  warn_on_volume_mismatch(grid, run);
  std::optional<KdTree3> index;
  if (method == Method::kIcp) index.emplace(run.scene.map);

  const TrackingContext ctx = make_context(cfg, &grid, index ? &*index : nullptr);
  const TrackingRun tracking =
      stage("tracking", [&] { return run_tracking(run, method, mode, ctx, seed); });
  stage("write-trajectory", [&] {
    write_trajectory(tracking.estimates, out);
    std::ofstream timing(timing_path_for(out), std::ios::trunc);
    timing << "step,seconds\n";
    char buf[64];
    for (std::size_t k = 0; k < tracking.step_seconds.size(); ++k) {
      std::snprintf(buf, sizeof(buf), "%zu,%.9f\n", k, tracking.step_seconds[k]);
      timing << buf;
    }
  });
  if (tracking.failures > 0) {
    spdlog::warn("{} registration step(s) failed and held the previous pose", tracking.failures);
  }
  if (tracking.diverged) {
    spdlog::warn("{} / {} diverged after {} steps", to_string(method), to_string(mode),
                 tracking.estimates.size());
  }
  const BenchRow row = summarize(run, tracking);
  if (row.rmse_t) {
    std::printf("%s %s rmse_t %.6f rmse_a %.6f dt_mean %.6f\n", to_string(method),
                to_string(mode), row.rmse_t->rmse, row.rmse_a->rmse, row.dt.mean);
  } else {
    std::printf("%s %s diverged\n", to_string(method), to_string(mode));
  }
  return 0;
}

int cmd_benchmark(const std::string& grid_path, const std::string& scenario_dir,
                  const std::string& out, const std::string& config_path, std::uint64_t seed,
                  unsigned jobs) {
  const RunConfig cfg = config_or_default(config_path);
  const DfGrid grid = stage("load-grid", [&] { return load_grid(grid_path); });
  const ScenarioRun run = stage("load-scenario", [&] { return read_scenario(scenario_dir); });
  warn_on_volume_mismatch(grid, run);
  const KdTree3 index(run.scene.map);
  const TrackingContext ctx = make_context(cfg, &grid, &index);
  const auto rows = stage("benchmark", [&] { return run_benchmark(run, ctx, seed, jobs); });
  stage("write-report", [&] {
    write_bench_report(rows, out);
    write_bench_timing(rows, timing_path_for(out));
  });
  for (const auto& r : rows) {
    if (r.rmse_t) {
      std::printf("%-4s %-10s rmse_t %.4f (%.4f) rmse_a %.4f (%.4f) dt %.5f (%.5f)\n",
                  to_string(r.method), to_string(r.mode), r.rmse_t->rmse, r.rmse_t->dev,
                  r.rmse_a->rmse, r.rmse_a->dev, r.dt.mean, r.dt.dev);
    } else {
      std::printf("%-4s %-10s diverged\n", to_string(r.method), to_string(r.mode));
    }
  }
  return 0;
}

int cmd_eval(const std::string& est_path, const std::string& gt_path) {
  const auto est = stage("read-estimate", [&] { return read_trajectory(est_path); });
  const auto gt = stage("read-ground-truth", [&] { return read_trajectory(gt_path); });
  const ErrorStats t = stage("eval", [&] { return rmse_translation(std::span(est), std::span(gt)); });
  const ErrorStats a = stage("eval", [&] { return rmse_yaw(std::span(est), std::span(gt)); });
  std::printf("rmse_t %.9f dev %.9f\n", t.rmse, t.dev);
  std::printf("rmse_a %.9f dev %.9f\n", a.rmse, a.dev);

  const auto timing_file = timing_path_for(est_path);
  std::ifstream timing(timing_file);
  if (timing) {
    std::vector<double> seconds;
    std::string line;
    std::getline(timing, line);
    while (std::getline(timing, line)) {
      const auto comma = line.find(',');
      if (comma != std::string::npos) seconds.push_back(std::stod(line.substr(comma + 1)));
    }
    const MeanDev dt = mean_and_dev(seconds);
    std::printf("dt_mean %.9f dt_dev %.9f steps %zu\n", dt.mean, dt.dev, seconds.size());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::cfg::load_env_levels();  // SPDLOG_LEVEL=debug|info|warn|...
  spdlog::set_pattern("[%l] %v");

  CLI::App app{"Distance-field LIDAR localization toolkit"};
  app.require_subcommand(1);

  std::string map_path, out, grid_path, scenario_dir, config_path, method = "dll",
                                                                   mode = "baseline";
  std::string est_path, gt_path;
  double resolution = 0.05, margin = 1.0;
  std::uint64_t seed = 0;
  unsigned jobs = 1;

  auto* build = app.add_subcommand("build-df", "Build a distance-field grid from a map cloud");
  build->add_option("--map", map_path, "Map cloud (XYZ or binary)")->required();
  build->add_option("--resolution", resolution, "Cell edge in meters")->capture_default_str();
  build->add_option("--margin", margin, "Padding around the map in meters")->capture_default_str();
  build->add_option("--out", out, "Output .df file")->required();

  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic scenario bundle");
  simulate->add_option("--config", config_path, "Run configuration file");
  simulate->add_option("--out", out, "Output scenario directory")->required();
  auto* sim_seed = simulate->add_option("--seed", seed, "Overrides the config seed");

  auto* localize = app.add_subcommand("localize", "Track a scenario and write the trajectory");
  localize->add_option("--grid", grid_path)->required();
  localize->add_option("--scenario", scenario_dir)->required();
  localize->add_option("--method", method)->check(CLI::IsMember({"dll", "icp"}))->capture_default_str();
  localize->add_option("--mode", mode)
      ->check(CLI::IsMember({"baseline", "noodom", "midnoise", "largenoise"}))
      ->capture_default_str();
  localize->add_option("--out", out)->required();
  localize->add_option("--config", config_path);
  localize->add_option("--seed", seed)->capture_default_str();

  auto* bench = app.add_subcommand("benchmark", "Run every method and odometry mode");
  bench->add_option("--grid", grid_path)->required();
  bench->add_option("--scenario", scenario_dir)->required();
  bench->add_option("--out", out, "Report CSV; timing goes to <out>.timing.csv")->required();
  bench->add_option("--config", config_path);
  bench->add_option("--seed", seed)->capture_default_str();
  bench->add_option("--jobs", jobs, "Parallel (method, mode) runs")->capture_default_str();

  auto* eval = app.add_subcommand("eval", "RMSE of an estimated trajectory");
  eval->add_option("--est", est_path)->required();
  eval->add_option("--gt", gt_path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*build) return cmd_build_df(map_path, resolution, margin, out);
    if (*simulate) {
      return cmd_simulate(config_path, out,
                          sim_seed->count() ? std::optional<std::uint64_t>(seed) : std::nullopt);
    }
    if (*localize) {
      return cmd_localize(grid_path, scenario_dir, method, mode, out, config_path, seed);
    }
    if (*bench) return cmd_benchmark(grid_path, scenario_dir, out, config_path, seed, jobs);
    if (*eval) return cmd_eval(est_path, gt_path);
  } catch (const StageError& e) {
    spdlog::error("{} failed: {}", e.stage, e.what());
    return 2;
  }
  return 1;
}
