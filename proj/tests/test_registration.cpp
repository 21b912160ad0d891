#include <doctest.h>

#include <random>

#include "dfloc/registration.hpp"
#include "dfloc/synth.hpp"
#include "oracles.hpp"

using namespace dfloc;

namespace {

struct Room {
  Scene scene;
  DfGrid grid;
  Pose4 pose;
};

const Room& room() {
  static const Room r = [] {
    Scene scene = make_scene(SceneKind::kBoxRoom, 4.0, 100.0, 41);
    DfGrid grid = build_grid(scene.map, plan_grid(scene.map, 0.05, 1.0));
    const Point3 mid = (scene.free_lower + scene.free_upper) / 2.0;
    return Room{std::move(scene), std::move(grid), Pose4(mid + Point3(0.2, -0.1, 0.05), 0.4)};
  }();
  return r;
}

PointCloud body_scan(const Room& r, double noise, double outliers, std::uint64_t seed) {
  ScanModel m;
  m.points = 1000;
  m.noise_sigma = noise;
  m.outlier_fraction = outliers;
  return tilt_compensate(simulate_scan(r.scene, r.pose, Attitude{}, m, seed), Attitude{});
}

// Points away from cell faces so central differences do not straddle a kink.
bool clear_of_faces(const DfGrid& g, const Point3& x, double clearance) {
  const auto& s = g.spec();
  for (int a = 0; a < 3; ++a) {
    const double f = (x[a] - s.origin[a]) / s.resolution;
    if (std::abs(f - std::round(f)) * s.resolution < clearance) return false;
  }
  return g.contains(x);
}

// Sparse jittered lattice: every point is > 0.2 m from every other.
std::vector<Point3> sparse_map(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  std::vector<Point3> pts;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 8; ++j)
      for (int k = 0; k < 5; ++k) pts.emplace_back(0.3 * i + u(rng), 0.3 * j + u(rng), 0.3 * k + u(rng));
  return pts;
}

ErrorCode error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kContractViolation;
}

}  // namespace

TEST_CASE("dll: exact map samples at the true pose stay put") {
  const Room& r = room();
  const PointCloud body = body_scan(r, 0.0, 0.0, 1);
  const auto res = dll_register(body, r.grid, r.pose);
  // Interpolated DF is not exactly zero between lattice nodes.
  CHECK(res.report.final_cost / double(body.size()) < 1e-3);
  CHECK(res.report.final_cost <= res.report.initial_cost);
  CHECK((res.pose.t - r.pose.t).norm() < 1e-3);
  CHECK(std::abs(wrap_angle(res.pose.yaw - r.pose.yaw)) < 1e-3);
  CHECK(res.points_used + res.points_out_of_map == body.size());
  CHECK(res.elapsed > 0.0);
}

TEST_CASE("dll: recovers perturbed poses") {
  const Room& r = room();
  std::mt19937_64 rng(42);
  std::normal_distribution<double> g(0.0, 1.0);
  int ok = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const PointCloud body = body_scan(r, 0.02, 0.0, 100 + trial);
    const Pose4 guess(r.pose.t + 0.2 * Point3(g(rng), g(rng), g(rng)), r.pose.yaw + 0.05 * g(rng));
    const auto res = dll_register(body, r.grid, guess);
    CHECK(res.report.final_cost <= res.report.initial_cost);
    ok += (res.pose.t - r.pose.t).norm() < 0.05 && std::abs(wrap_angle(res.pose.yaw - r.pose.yaw)) < 0.01;
  }
  CHECK(ok >= 9);
}

TEST_CASE("dll: 20% clutter is suppressed") {
  const Room& r = room();
  const PointCloud body = body_scan(r, 0.02, 0.2, 7);
  const Pose4 guess(r.pose.t + Point3(0.15, -0.1, 0.05), r.pose.yaw - 0.04);
  const auto res = dll_register(body, r.grid, guess);
  CHECK((res.pose.t - r.pose.t).norm() < 0.08);
  CHECK(std::abs(wrap_angle(res.pose.yaw - r.pose.yaw)) < 0.02);
}

TEST_CASE("dll: residual Jacobian matches central differences") {
  const Room& r = room();
  const PointCloud body = body_scan(r, 0.02, 0.0, 8);
  const DfResidualProvider provider(body, r.grid);
  std::mt19937_64 rng(43);
  std::normal_distribution<double> g(0.0, 1.0);
  const double h = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    const Pose4 x(r.pose.t + 0.2 * Point3(g(rng), g(rng), g(rng)), r.pose.yaw + 0.1 * g(rng));
    Residuals res;
    Jacobian jac;
    provider.evaluate(x, res, jac);
    for (int c = 0; c < 4; ++c) {
      Eigen::Vector4d lo = x.params(), hi = x.params();
      lo[c] -= h;
      hi[c] += h;
      Residuals rl, rh;
      Jacobian jl, jh;
      provider.evaluate(Pose4::FromParams(lo), rl, jl);
      provider.evaluate(Pose4::FromParams(hi), rh, jh);
      for (std::size_t i = 0; i < body.size(); ++i) {
        const Point3 at = oracle::apply_pose(x, body[i]);
        if (!clear_of_faces(r.grid, at, 1e-4)) continue;
        const auto row = static_cast<Eigen::Index>(i);
        CHECK(std::abs(jac(row, c) - (rh[row] - rl[row]) / (2 * h)) < 1e-4);
      }
    }
  }
}

TEST_CASE("dll: out-of-grid points are zero rows") {
  const Room& r = room();
  std::vector<Point3> pts = body_scan(r, 0.0, 0.0, 9).points();
  pts.emplace_back(1e4, 0, 0);
  const PointCloud body(Frame::kBody, pts);
  Residuals res;
  Jacobian jac;
  DfResidualProvider(body, r.grid).evaluate(r.pose, res, jac);
  CHECK(res[res.size() - 1] == 0.0);
  CHECK(jac.row(jac.rows() - 1).isZero(0.0));
}

TEST_CASE("dll: error classes") {
  const Room& r = room();
  CHECK(error_of([&] { dll_register(PointCloud(Frame::kBody), r.grid, r.pose); }) == ErrorCode::kEmptyInput);
  const PointCloud sensor(Frame::kSensor, {Point3(1, 0, 0)});
  CHECK(error_of([&] { dll_register(sensor, r.grid, r.pose); }) == ErrorCode::kContractViolation);
  const PointCloud far(Frame::kBody, {Point3(100, 0, 0), Point3(0, 100, 0)});
  CHECK(error_of([&] { dll_register(far, r.grid, r.pose); }) == ErrorCode::kUnobservablePose);
}

TEST_CASE("dll: translation equivariance and determinism") {
  const Room& r = room();
  const PointCloud body = body_scan(r, 0.02, 0.0, 10);
  const Point3 v(2.0, -3.0, 0.5);
  std::vector<Point3> shifted;
  for (const auto& p : r.scene.map) shifted.push_back(p + v);
  GridSpec spec = r.grid.spec();
  spec.origin += v;
  const DfGrid moved = build_grid(PointCloud(Frame::kMap, shifted), spec);

  const Pose4 guess(r.pose.t + Point3(0.1, 0.1, -0.05), r.pose.yaw + 0.03);
  const auto a = dll_register(body, r.grid, guess);
  const auto b = dll_register(body, moved, Pose4(guess.t + v, guess.yaw));
  CHECK((b.pose.t - v - a.pose.t).norm() < 1e-5);
  CHECK(std::abs(b.pose.yaw - a.pose.yaw) < 1e-5);

  const auto c = dll_register(body, r.grid, guess);
  CHECK(c.pose.params() == a.pose.params());
  CHECK(c.report.accepted_costs == a.report.accepted_costs);
}

TEST_CASE("align_4dof equals the SVD closed form") {
  std::mt19937_64 rng(44);
  const auto src = oracle::uniform_points(50, Point3(-2, -2, -1), Point3(2, 2, 1), rng);
  const Pose4 truth(0.7, -1.2, 0.3, -2.2);
  std::vector<Point3> dst;
  for (const auto& p : src) dst.push_back(oracle::apply_pose(truth, p));
  const std::vector<double> w(src.size(), 1.0);
  const Pose4 got = align_4dof(src, dst, w);
  const Pose4 ref = oracle::umeyama_4dof(src, dst);
  CHECK((got.t - ref.t).norm() < 1e-9);
  CHECK(std::abs(wrap_angle(got.yaw - ref.yaw)) < 1e-9);
  CHECK((got.t - truth.t).norm() < 1e-9);

  CHECK(error_of([&] { align_4dof(src, dst, std::vector<double>(src.size(), 0.0)); }) ==
        ErrorCode::kNoCorrespondences);
  CHECK(error_of([&] { align_4dof(src, dst, std::vector<double>(3, 1.0)); }) == ErrorCode::kLengthMismatch);
}

TEST_CASE("icp: map subsample at identity") {
  const auto pts = sparse_map(45);
  const KdTree3 index(PointCloud(Frame::kMap, pts));
  const PointCloud body(Frame::kBody, std::vector<Point3>(pts.begin(), pts.begin() + 150));
  const auto res = icp_register(body, index, Pose4::Identity());
  CHECK(res.report.iterations <= 2);
  CHECK(res.pose.t.norm() < 1e-12);
  CHECK(std::abs(res.pose.yaw) < 1e-12);
}

TEST_CASE("icp: 0.05 m offset is recovered; 0.5 m is not") {
  const auto pts = sparse_map(46);
  const KdTree3 index(PointCloud(Frame::kMap, pts));
  const PointCloud body(Frame::kBody, pts);
  const auto near = icp_register(body, index, Pose4(0.03, -0.03, 0.025, 0.0));
  CHECK(near.pose.t.norm() < 1e-3);

  bool failed = false;
  try {
    const auto far = icp_register(body, index, Pose4(0.5, 0.5, 0.5, 0.0));
    failed = far.pose.t.norm() > 0.05;
  } catch (const Error& e) {
    failed = e.code() == ErrorCode::kNoCorrespondences;
  }
  CHECK(failed);
}

TEST_CASE("icp: unbounded thresholds reproduce the closed-form alignment") {
  std::mt19937_64 rng(47);
  const auto pts = sparse_map(48);
  const Pose4 truth(0.02, -0.01, 0.015, 0.01);
  std::vector<Point3> body_pts;
  for (const auto& p : pts) body_pts.push_back(oracle::apply_pose(inverse(truth), p));
  IcpOptions o;
  o.max_correspondence_distance = 1e9;
  o.outlier_rejection_threshold = 1e9;
  o.convergence_epsilon = 1e-12;
  const auto res = icp_register(PointCloud(Frame::kBody, body_pts), KdTree3(PointCloud(Frame::kMap, pts)),
                                Pose4::Identity(), o);
  const Pose4 ref = oracle::umeyama_4dof(body_pts, pts);
  CHECK((res.pose.t - ref.t).norm() < 1e-9);
  CHECK(std::abs(wrap_angle(res.pose.yaw - ref.yaw)) < 1e-9);
}

TEST_CASE("icp: option validation and error classes") {
  const auto pts = sparse_map(49);
  const KdTree3 index(PointCloud(Frame::kMap, pts));
  IcpOptions o;
  o.max_correspondence_distance = 0.0;
  CHECK(error_of([&] { icp_register(PointCloud(Frame::kBody, pts), index, Pose4(), o); }) ==
        ErrorCode::kInvalidValue);
  const PointCloud far(Frame::kBody, {Point3(50, 50, 50)});
  CHECK(error_of([&] { icp_register(far, index, Pose4()); }) == ErrorCode::kNoCorrespondences);
  CHECK(error_of([&] { icp_register(PointCloud(Frame::kMap, pts), index, Pose4()); }) ==
        ErrorCode::kContractViolation);
}
