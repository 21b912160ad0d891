#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "dfloc/distance_field.hpp"
#include "oracles.hpp"

using namespace dfloc;

namespace {

PointCloud unit_cube_corners() {
  std::vector<Point3> pts;
  for (int k = 0; k < 8; ++k) pts.emplace_back(k & 1, (k >> 1) & 1, (k >> 2) & 1);
  return PointCloud(Frame::kMap, pts);
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("dfloc_test_df_" + name);
}

std::vector<char> slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void dump(const std::filesystem::path& p, const std::vector<char>& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

ErrorCode load_error(const std::filesystem::path& p) {
  try {
    load_grid(p);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("load_grid accepted a malformed file");
  return ErrorCode::kContractViolation;
}

struct RandomScene {
  std::vector<Point3> pts;
  DfGrid grid;
};

RandomScene random_scene(std::size_t n, double res, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto pts = oracle::uniform_points(n, Point3(0, 0, 0), Point3(1, 0.8, 0.6), rng);
  const PointCloud map(Frame::kMap, pts);
  DfGrid grid = build_grid(map, plan_grid(map, res, 0.2));
  return {std::move(pts), std::move(grid)};
}

}  // namespace

TEST_CASE("plan_grid examples") {
  const GridSpec a = plan_grid(unit_cube_corners(), 0.5, 0.0);
  CHECK(a.cells == std::array<std::size_t, 3>{2, 2, 2});
  CHECK(a.origin == Point3(0, 0, 0));

  const GridSpec b = plan_grid(unit_cube_corners(), 0.5, 0.5);
  CHECK(b.cells == std::array<std::size_t, 3>{4, 4, 4});
  CHECK(b.origin == Point3(-0.5, -0.5, -0.5));

  const GridSpec d = plan_grid(PointCloud(Frame::kMap, {Point3(3, 3, 3), Point3(3, 3, 3)}), 0.1, 0.0);
  CHECK(d.cells == std::array<std::size_t, 3>{2, 2, 2});

  CHECK_THROWS_AS(plan_grid(PointCloud(Frame::kMap), 0.1, 0.0), Error);
  CHECK_THROWS_AS(plan_grid(unit_cube_corners(), 0.0, 0.0), Error);
  CHECK_THROWS_AS(plan_grid(unit_cube_corners(), 1e-12, 0.0), Error);
}

TEST_CASE("fit_cell_coeffs examples") {
  CornerValues c = CornerValues::Constant(0.7);
  CellCoeffs a = fit_cell_coeffs(c, 0.25);
  CHECK(a[0] == doctest::Approx(0.7));
  for (int k = 1; k < 8; ++k) CHECK(a[k] == doctest::Approx(0.0));

  const double h = 0.25;
  for (int k = 0; k < 8; ++k) c[k] = (k & 1) * h;
  a = fit_cell_coeffs(c, h);
  CHECK(a[1] == doctest::Approx(1.0));
  for (int k : {0, 2, 3, 4, 5, 6, 7}) CHECK(a[k] == doctest::Approx(0.0));
}

TEST_CASE("fit_cell_coeffs matches the 8x8 linear solve") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (double h : {0.05, 0.1, 1.0}) {
    for (int trial = 0; trial < 200; ++trial) {
      CornerValues c;
      for (int k = 0; k < 8; ++k) c[k] = u(rng);
      const CellCoeffs a = fit_cell_coeffs(c, h);
      const auto ref = oracle::trilinear_coeffs(c, h);
      for (int k = 0; k < 8; ++k) CHECK(a[k] == doctest::Approx(ref[k]).epsilon(1e-9).scale(1.0));
      for (int k = 0; k < 8; ++k) {
        const Point3 corner((k & 1) * h, ((k >> 1) & 1) * h, ((k >> 2) & 1) * h);
        CHECK(std::abs(eval_cell(a, corner) - c[k]) < 1e-9);
      }
      const Point3 local(u(rng) * h / 2, u(rng) * h / 2, u(rng) * h / 2);
      CHECK(std::abs(eval_cell(a, local) - oracle::trilinear(c, h, local)) < 1e-12);
    }
  }
}

TEST_CASE("single map point at a lattice node") {
  const PointCloud map(Frame::kMap, {Point3(0.5, 0.5, 0.5)});
  GridSpec spec;
  spec.origin = Point3(0, 0, 0);
  spec.resolution = 0.25;
  spec.cells = {4, 4, 4};
  const DfGrid grid = build_grid(map, spec);
  CHECK(grid.node_value(2, 2, 2) == 0.0);
  CHECK(grid.node_value(3, 2, 2) == doctest::Approx(0.25));
  CHECK(grid.node_value(3, 3, 2) == doctest::Approx(0.25 * std::sqrt(2.0)));
  CHECK(grid.node_value(0, 0, 0) == doctest::Approx(0.5 * std::sqrt(3.0)));
}

TEST_CASE("build_grid requires a nonempty map-frame cloud") {
  GridSpec spec;
  CHECK_THROWS_AS(build_grid(PointCloud(Frame::kMap), spec), Error);
  try {
    build_grid(PointCloud(Frame::kBody, {Point3(0, 0, 0)}), spec);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kContractViolation);
  }
}

TEST_CASE("node exactness, corner reconstruction, lattice Lipschitz bound") {
  const auto s = random_scene(500, 0.1, 22);
  const GridSpec& sp = s.grid.spec();
  for (std::size_t k = 0; k <= sp.cells[2]; ++k) {
    for (std::size_t j = 0; j <= sp.cells[1]; ++j) {
      for (std::size_t i = 0; i <= sp.cells[0]; ++i) {
        const double v = s.grid.node_value(i, j, k);
        CHECK(std::abs(v - oracle::nearest_distance(s.pts, s.grid.node_position(i, j, k))) < 1e-9);
        CHECK(v >= 0.0);
        if (i > 0) CHECK(std::abs(v - s.grid.node_value(i - 1, j, k)) <= sp.resolution * std::sqrt(3.0) + 1e-9);
      }
    }
  }
  for (std::size_t k = 0; k < sp.cells[2]; ++k) {
    for (std::size_t j = 0; j < sp.cells[1]; ++j) {
      for (std::size_t i = 0; i < sp.cells[0]; ++i) {
        const CellCoeffs a = s.grid.cell(i, j, k);
        for (int c = 0; c < 8; ++c) {
          const int di = c & 1, dj = (c >> 1) & 1, dk = (c >> 2) & 1;
          const Point3 local = sp.resolution * Point3(di, dj, dk);
          CHECK(std::abs(eval_cell(a, local) - s.grid.node_value(i + di, j + dj, k + dk)) < 1e-9);
        }
      }
    }
  }
}

TEST_CASE("query semantics") {
  const auto s = random_scene(300, 0.1, 23);
  const GridSpec& sp = s.grid.spec();

  SUBCASE("at lattice nodes") {
    for (std::size_t i = 0; i <= sp.cells[0]; i += 3) {
      const DfSample q = s.grid.query(s.grid.node_position(i, 2, 1));
      CHECK(q.inside);
      CHECK(std::abs(q.value - s.grid.node_value(i, 2, 1)) < 1e-9);
    }
  }
  SUBCASE("outside is the zero sample") {
    for (const Point3& x : {Point3(sp.origin - Point3(0.01, 0, 0)),
                            Point3(sp.origin + sp.extent() + Point3(0, 0, 1e-6)),
                            Point3(1e9, 0, 0), Point3(std::nan(""), 0.3, 0.3)}) {
      const DfSample q = s.grid.query(x);
      CHECK_FALSE(q.inside);
      CHECK(q.value == 0.0);
      CHECK(q.gradient == Eigen::Vector3d::Zero());
    }
  }
  SUBCASE("interior values follow the trilinear oracle and stay non-negative") {
    std::mt19937_64 rng(24);
    for (const auto& x : oracle::uniform_points(2000, sp.origin, Point3(sp.origin + sp.extent()), rng)) {
      const DfSample q = s.grid.query(x);
      REQUIRE(q.inside);
      CHECK(q.value >= 0.0);
      std::array<std::size_t, 3> idx{};
      for (int a = 0; a < 3; ++a) {
        idx[a] = std::min<std::size_t>(std::size_t((x[a] - sp.origin[a]) / sp.resolution), sp.cells[a] - 1);
      }
      CornerValues c;
      for (int k = 0; k < 8; ++k) c[k] = s.grid.node_value(idx[0] + (k & 1), idx[1] + ((k >> 1) & 1), idx[2] + ((k >> 2) & 1));
      const Point3 local = x - s.grid.node_position(idx[0], idx[1], idx[2]);
      CHECK(std::abs(q.value - oracle::trilinear(c, sp.resolution, local)) < 1e-12);
      CHECK(std::abs(q.value - oracle::nearest_distance(s.pts, x)) <= sp.resolution * std::sqrt(3.0));
    }
  }
  SUBCASE("continuity across shared faces") {
    std::mt19937_64 rng(25);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 300; ++trial) {
      const std::size_t i = 1 + rng() % (sp.cells[0] - 1), j = rng() % sp.cells[1], k = rng() % sp.cells[2];
      const double h = sp.resolution;
      const double y = u(rng) * h, z = u(rng) * h;
      const double left = eval_cell(s.grid.cell(i - 1, j, k), Point3(h, y, z));
      const double right = eval_cell(s.grid.cell(i, j, k), Point3(0, y, z));
      CHECK(std::abs(left - right) < 1e-9);
    }
  }
  SUBCASE("gradient matches central differences") {
    std::mt19937_64 rng(26);
    const double h = 1e-6;
    int checked = 0;
    for (const auto& x : oracle::uniform_points(1500, sp.origin, Point3(sp.origin + sp.extent()), rng)) {
      bool near_face = false;
      for (int a = 0; a < 3; ++a) {
        const double f = (x[a] - sp.origin[a]) / sp.resolution;
        near_face |= std::abs(f - std::round(f)) * sp.resolution < 1e-5;
      }
      if (near_face) continue;
      const DfSample q = s.grid.query(x);
      for (int a = 0; a < 3; ++a) {
        const double fd = oracle::central_diff(
            [&](double v) {
              Point3 y = x;
              y[a] = v;
              return s.grid.query(y).value;
            },
            x[a], h);
        CHECK(std::abs(q.gradient[a] - fd) < 1e-5);
      }
      ++checked;
    }
    CHECK(checked > 1000);
  }
}

TEST_CASE("save/load is bit-exact") {
  const auto s = random_scene(200, 0.1, 27);
  const auto path = temp_file("roundtrip.df");
  save_grid(s.grid, path);
  const DfGrid back = load_grid(path);
  CHECK(back == s.grid);
  CHECK(back.spec() == s.grid.spec());
  CHECK(std::filesystem::file_size(path) ==
        76 + 8 * s.grid.spec().node_count() + 64 * s.grid.spec().cell_count());
  save_grid(back, temp_file("roundtrip2.df"));
  CHECK(slurp(path) == slurp(temp_file("roundtrip2.df")));
}

TEST_CASE("malformed grid files map to distinct errors") {
  const auto s = random_scene(100, 0.2, 28);
  const auto good = temp_file("good.df");
  save_grid(s.grid, good);
  const auto bytes = slurp(good);
  const auto bad = temp_file("bad.df");

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  dump(bad, bad_magic);
  CHECK(load_error(bad) == ErrorCode::kBadMagic);

  auto bad_version = bytes;
  bad_version[8] = 9;
  dump(bad, bad_version);
  CHECK(load_error(bad) == ErrorCode::kVersionMismatch);

  dump(bad, std::vector<char>(bytes.begin(), bytes.end() - 1));
  CHECK(load_error(bad) == ErrorCode::kTruncated);

  auto extra = bytes;
  extra.push_back(0);
  dump(bad, extra);
  CHECK(load_error(bad) == ErrorCode::kTruncated);

  dump(bad, std::vector<char>(bytes.begin(), bytes.begin() + 40));
  CHECK(load_error(bad) == ErrorCode::kTruncated);

  auto huge = bytes;
  for (int b = 0; b < 8; ++b) huge[52 + b] = static_cast<char>(0xff);
  dump(bad, huge);
  CHECK(load_error(bad) == ErrorCode::kDimensionOverflow);

  auto zero_res = bytes;
  for (int b = 0; b < 8; ++b) zero_res[36 + b] = 0;
  dump(bad, zero_res);
  CHECK(load_error(bad) == ErrorCode::kInvalidValue);

  CHECK(load_error(temp_file("does_not_exist.df")) == ErrorCode::kIo);
}
