#include <atomic>
#include <fstream>
#include <thread>

#include "dfloc/eval.hpp"
#include "io_util.hpp"

namespace dfloc {

std::vector<std::optional<OdomDelta>> mode_odometry(const ScenarioRun& run, OdomMode mode,
                                                    std::uint64_t seed) {
  std::vector<OdomDelta> truth;
  truth.reserve(run.frames.size());
  for (const auto& f : run.frames) truth.push_back(f.odom.value_or(OdomDelta()));

  std::vector<OdomDelta> used;
  switch (mode) {
    case OdomMode::kNoOdom:
      return std::vector<std::optional<OdomDelta>>(run.frames.size());
    case OdomMode::kBaseline:
      used = truth;
      break;
    case OdomMode::kMidNoise:
      used = corrupt_odometry(truth, NoiseSetup::Mid(derive_seed(seed, 7001)));
      break;
    case OdomMode::kLargeNoise:
      used = corrupt_odometry(truth, NoiseSetup::Large(derive_seed(seed, 7002)));
      break;
  }
  std::vector<std::optional<OdomDelta>> out(used.begin(), used.end());
  // The first frame is registered at the initial pose.
  if (!out.empty()) out.front() = OdomDelta();
  return out;
}

TrackingRun run_tracking(const ScenarioRun& run, Method method, OdomMode mode,
                         const TrackingContext& ctx, std::uint64_t seed) {
  if (run.frames.empty() || run.frames.size() != run.ground_truth.size()) {
    throw Error(ErrorCode::kLengthMismatch, "run_tracking: malformed scenario");
  }
  Registrar registrar;
  if (method == Method::kDll) {
    if (ctx.grid == nullptr) throw Error(ErrorCode::kContractViolation, "dll tracking needs a grid");
    registrar = make_dll_registrar(*ctx.grid, ctx.loss, ctx.solver);
  } else {
    if (ctx.index == nullptr) throw Error(ErrorCode::kContractViolation, "icp tracking needs an index");
    registrar = make_icp_registrar(*ctx.index, ctx.icp);
  }

  TrackingRun out;
  out.method = method;
  out.mode = mode;
  const auto odom = mode_odometry(run, mode, seed);
  TrackerState state = init_tracker(run.ground_truth.front());
  for (std::size_t k = 0; k < run.frames.size(); ++k) {
    ScanFrame frame = run.frames[k];
    frame.odom = odom[k];
    try {
      state = track_step(state, frame, registrar);
      out.step_seconds.push_back(state.last_result->elapsed);
      out.final_costs.push_back(state.last_result->report.final_cost);
    } catch (const TrackingError&) {
      ++out.failures;
      // Hold the last pose; keep step numbering aligned with frames.
      ++state.step_index;
    }
    out.estimates.push_back({frame.timestamp, state.current_pose, frame.attitude,
                             TrajectorySource::kEstimate});
    const double err = (state.current_pose.t - run.ground_truth[k].t).norm();
    if (!state.current_pose.allFinite() || !(err <= kDivergenceThreshold)) {
      out.diverged = true;
      break;
    }
  }
  return out;
}

BenchRow summarize(const ScenarioRun& run, const TrackingRun& tracking) {
  BenchRow row;
  row.method = tracking.method;
  row.mode = tracking.mode;
  row.diverged = tracking.diverged;
  row.steps = tracking.estimates.size();
  row.failures = tracking.failures;
  row.dt = mean_and_dev(tracking.step_seconds);
  if (!tracking.diverged) {
    const auto gt = ground_truth_rows(run);
    row.rmse_t = rmse_translation(std::span(tracking.estimates), std::span(gt));
    row.rmse_a = rmse_yaw(std::span(tracking.estimates), std::span(gt));
  }
  return row;
}

std::vector<BenchRow> run_benchmark(const ScenarioRun& run, const TrackingContext& ctx,
                                    std::uint64_t seed, unsigned jobs) {
  std::vector<std::pair<Method, OdomMode>> pairs;
  for (Method m : {Method::kDll, Method::kIcp}) {
    for (OdomMode mode : {OdomMode::kBaseline, OdomMode::kNoOdom, OdomMode::kMidNoise,
                          OdomMode::kLargeNoise}) {
      pairs.emplace_back(m, mode);
    }
  }
  std::vector<BenchRow> rows(pairs.size());
  auto work = [&](std::size_t i) {
    rows[i] = summarize(run, run_tracking(run, pairs[i].first, pairs[i].second, ctx, seed));
  };
  if (jobs <= 1) {
    for (std::size_t i = 0; i < pairs.size(); ++i) work(i);
    return rows;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(jobs);
  {
    std::vector<std::jthread> workers;
    for (unsigned w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w] {
        try {
          for (std::size_t i = next++; i < pairs.size(); i = next++) work(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return rows;
}

void write_bench_report(const std::vector<BenchRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open for writing: " + path.string());
  out << "method,mode,rmse_t,rmse_t_dev,rmse_a,rmse_a_dev,diverged,steps,failures\n";
  for (const auto& r : rows) {
    out << to_string(r.method) << ',' << to_string(r.mode) << ',';
    if (r.rmse_t && r.rmse_a) {
      out << detail::fixed9(r.rmse_t->rmse) << ',' << detail::fixed9(r.rmse_t->dev) << ','
          << detail::fixed9(r.rmse_a->rmse) << ',' << detail::fixed9(r.rmse_a->dev);
    } else {
      out << ",,,";
    }
    out << ',' << (r.diverged ? "true" : "false") << ',' << r.steps << ',' << r.failures << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

void write_bench_timing(const std::vector<BenchRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open for writing: " + path.string());
  out << "method,mode,dt_mean,dt_dev,steps\n";
  for (const auto& r : rows) {
    out << to_string(r.method) << ',' << to_string(r.mode) << ',' << detail::fixed9(r.dt.mean)
        << ',' << detail::fixed9(r.dt.dev) << ',' << r.steps << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

}  // namespace dfloc
