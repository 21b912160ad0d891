#include "dfloc/distance_field.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <vector>

#include "dfloc/kdtree.hpp"

namespace dfloc {

namespace {

// Above this many lattice nodes the grid is rejected as a dimension overflow.
constexpr std::uint64_t kMaxNodes = std::uint64_t(1) << 32;

constexpr char kMagic[8] = {'D', 'F', 'L', 'O', 'C', 'G', 'R', 'D'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 8 + 4 + 3 * 8 + 8 + 8 + 3 * 8;

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<unsigned char>(v >> (8 * b)));
}
void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<unsigned char>(v >> (8 * b)));
}
void put_f64(std::vector<unsigned char>& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int b = 7; b >= 0; --b) v = (v << 8) | p[b];
  return v;
}
std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int b = 3; b >= 0; --b) v = (v << 8) | p[b];
  return v;
}
double get_f64(const unsigned char* p) { return std::bit_cast<double>(get_u64(p)); }

// Overflow-checked product of (n + extra) over the three axes.
bool checked_count(const std::array<std::uint64_t, 3>& n, std::uint64_t extra,
                   std::uint64_t& out) {
  std::uint64_t total = 1;
  for (auto c : n) {
    if (c > kMaxNodes) return false;
    const std::uint64_t f = c + extra;
    if (total > kMaxNodes / f) return false;
    total *= f;
  }
  out = total;
  return true;
}

}  // namespace

CellCoeffs fit_cell_coeffs(const CornerValues& c, double resolution) {
  const double h = resolution;
  const double h2 = h * h;
  const double h3 = h2 * h;
  CellCoeffs a;
  a[0] = c[0];
  a[1] = (c[1] - c[0]) / h;
  a[2] = (c[2] - c[0]) / h;
  a[3] = (c[4] - c[0]) / h;
  a[4] = (c[3] - c[1] - c[2] + c[0]) / h2;
  a[5] = (c[5] - c[1] - c[4] + c[0]) / h2;
  a[6] = (c[6] - c[2] - c[4] + c[0]) / h2;
  a[7] = (c[7] - c[3] - c[5] - c[6] + c[1] + c[2] + c[4] - c[0]) / h3;
  return a;
}

GridSpec plan_grid(const PointCloud& map, double resolution, double margin) {
  if (map.empty()) throw Error(ErrorCode::kEmptyInput, "plan_grid: empty map");
  if (!(resolution > 0.0) || !std::isfinite(resolution)) {
    throw Error(ErrorCode::kInvalidValue, "plan_grid: resolution must be > 0");
  }
  if (!(margin >= 0.0) || !std::isfinite(margin)) {
    throw Error(ErrorCode::kInvalidValue, "plan_grid: margin must be >= 0");
  }
  Point3 lo = map[0];
  Point3 hi = map[0];
  for (const auto& p : map) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  GridSpec spec;
  spec.resolution = resolution;
  spec.margin = margin;
  spec.origin = lo - Point3::Constant(margin);
  const Point3 span = (hi - lo) + Point3::Constant(2.0 * margin);
  for (int a = 0; a < 3; ++a) {
    const double n = std::ceil(span[a] / resolution - 1e-9);
    if (!(n < double(kMaxNodes))) {
      throw Error(ErrorCode::kDimensionOverflow, "plan_grid: grid too large");
    }
    spec.cells[a] = std::max<std::size_t>(2, static_cast<std::size_t>(std::max(n, 0.0)));
  }
  std::uint64_t nodes = 0;
  if (!checked_count({spec.cells[0], spec.cells[1], spec.cells[2]}, 1, nodes)) {
    throw Error(ErrorCode::kDimensionOverflow, "plan_grid: grid too large");
  }
  return spec;
}

DfGrid::DfGrid(GridSpec spec, Eigen::ArrayXd corners,
               Eigen::Matrix<double, 8, Eigen::Dynamic> coeffs)
    : spec_(spec), corners_(std::move(corners)), coeffs_(std::move(coeffs)) {
  if (static_cast<std::size_t>(corners_.size()) != spec_.node_count() ||
      static_cast<std::size_t>(coeffs_.cols()) != spec_.cell_count()) {
    throw Error(ErrorCode::kContractViolation, "DfGrid: payload does not match spec");
  }
  upper_ = spec_.origin + spec_.extent();
}

bool operator==(const DfGrid& a, const DfGrid& b) {
  return a.spec_ == b.spec_ && a.corners_.size() == b.corners_.size() &&
         a.coeffs_.cols() == b.coeffs_.cols() &&
         std::memcmp(a.corners_.data(), b.corners_.data(),
                     sizeof(double) * static_cast<std::size_t>(a.corners_.size())) == 0 &&
         std::memcmp(a.coeffs_.data(), b.coeffs_.data(),
                     sizeof(double) * static_cast<std::size_t>(a.coeffs_.size())) == 0;
}

DfGrid build_grid(const PointCloud& map, const GridSpec& spec) {
  if (map.empty()) throw Error(ErrorCode::kEmptyInput, "build_grid: empty map");
  if (map.frame() != Frame::kMap) {
    throw Error(ErrorCode::kContractViolation, "build_grid expects a map-frame cloud");
  }
  if (!(spec.resolution > 0.0) || spec.cells[0] < 2 || spec.cells[1] < 2 ||
      spec.cells[2] < 2) {
    throw Error(ErrorCode::kInvalidValue, "build_grid: invalid grid spec");
  }
  const KdTree3 index(map);
  const std::size_t nx = spec.cells[0] + 1;
  const std::size_t ny = spec.cells[1] + 1;
  const std::size_t nz = spec.cells[2] + 1;

  Eigen::ArrayXd corners(static_cast<Eigen::Index>(spec.node_count()));
  std::size_t hint = 0;
  Eigen::Index n = 0;
  for (std::size_t k = 0; k < nz; ++k) {
    for (std::size_t j = 0; j < ny; ++j) {
      for (std::size_t i = 0; i < nx; ++i) {
        const Point3 node =
            spec.origin + spec.resolution * Point3(double(i), double(j), double(k));
        // The previous node's winner is a near-optimal starting bound.
        const NearestResult nn = index.nearest(node, hint);
        hint = nn.index;
        corners[n++] = nn.distance;
      }
    }
  }

  Eigen::Matrix<double, 8, Eigen::Dynamic> coeffs(8, static_cast<Eigen::Index>(spec.cell_count()));
  Eigen::Index c = 0;
  for (std::size_t k = 0; k + 1 < nz; ++k) {
    for (std::size_t j = 0; j + 1 < ny; ++j) {
      for (std::size_t i = 0; i + 1 < nx; ++i) {
        CornerValues v;
        for (int corner = 0; corner < 8; ++corner) {
          const std::size_t ci = i + (corner & 1);
          const std::size_t cj = j + ((corner >> 1) & 1);
          const std::size_t ck = k + ((corner >> 2) & 1);
          v[corner] = corners[static_cast<Eigen::Index>(ci + nx * (cj + ny * ck))];
        }
        coeffs.col(c++) = fit_cell_coeffs(v, spec.resolution);
      }
    }
  }
  return DfGrid(spec, std::move(corners), std::move(coeffs));
}

void save_grid(const DfGrid& grid, const std::filesystem::path& path) {
  const GridSpec& s = grid.spec();
  std::vector<unsigned char> header;
  header.reserve(kHeaderBytes);
  header.insert(header.end(), std::begin(kMagic), std::end(kMagic));
  put_u32(header, kVersion);
  for (int a = 0; a < 3; ++a) put_f64(header, s.origin[a]);
  put_f64(header, s.resolution);
  put_f64(header, s.margin);
  for (int a = 0; a < 3; ++a) put_u64(header, s.cells[a]);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(header.data()),
            static_cast<std::streamsize>(header.size()));

  std::vector<unsigned char> chunk;
  auto flush = [&] {
    out.write(reinterpret_cast<const char*>(chunk.data()),
              static_cast<std::streamsize>(chunk.size()));
    chunk.clear();
  };
  chunk.reserve(1 << 20);
  for (Eigen::Index i = 0; i < grid.corners().size(); ++i) {
    put_f64(chunk, grid.corners()[i]);
    if (chunk.size() >= (1 << 20)) flush();
  }
  const auto& co = grid.coeffs();
  for (Eigen::Index c = 0; c < co.cols(); ++c) {
    for (int r = 0; r < 8; ++r) put_f64(chunk, co(r, c));
    if (chunk.size() >= (1 << 20)) flush();
  }
  flush();
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

DfGrid load_grid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open grid file: " + path.string());
  in.seekg(0, std::ios::end);
  const auto file_size = static_cast<std::uint64_t>(in.tellg());
  in.seekg(0, std::ios::beg);

  std::array<unsigned char, kHeaderBytes> h{};
  if (file_size < 8) throw Error(ErrorCode::kTruncated, "grid file shorter than its magic");
  in.read(reinterpret_cast<char*>(h.data()), 8);
  if (std::memcmp(h.data(), kMagic, 8) != 0) {
    throw Error(ErrorCode::kBadMagic, "not a distance-field grid file: " + path.string());
  }
  if (file_size < kHeaderBytes) throw Error(ErrorCode::kTruncated, "grid header truncated");
  in.read(reinterpret_cast<char*>(h.data() + 8), kHeaderBytes - 8);

  const std::uint32_t version = get_u32(h.data() + 8);
  if (version != kVersion) {
    throw Error(ErrorCode::kVersionMismatch,
                "unsupported grid version " + std::to_string(version));
  }
  GridSpec spec;
  const unsigned char* p = h.data() + 12;
  for (int a = 0; a < 3; ++a, p += 8) spec.origin[a] = get_f64(p);
  spec.resolution = get_f64(p);
  p += 8;
  spec.margin = get_f64(p);
  p += 8;
  std::array<std::uint64_t, 3> counts{};
  for (int a = 0; a < 3; ++a, p += 8) counts[a] = get_u64(p);

  std::uint64_t nodes = 0;
  std::uint64_t cells = 0;
  if (!checked_count(counts, 1, nodes) || !checked_count(counts, 0, cells)) {
    throw Error(ErrorCode::kDimensionOverflow, "grid dimensions overflow");
  }
  if (!(spec.resolution > 0.0) || !std::isfinite(spec.resolution) || !spec.origin.allFinite() ||
      !(spec.margin >= 0.0) || counts[0] < 2 || counts[1] < 2 || counts[2] < 2) {
    throw Error(ErrorCode::kInvalidValue, "grid header holds an invalid spec");
  }
  for (int a = 0; a < 3; ++a) spec.cells[a] = static_cast<std::size_t>(counts[a]);

  const std::uint64_t expected = kHeaderBytes + 8 * nodes + 64 * cells;
  if (file_size != expected) {
    throw Error(ErrorCode::kTruncated,
                "grid payload size " + std::to_string(file_size) + " does not match header (" +
                    std::to_string(expected) + " bytes expected)");
  }

  std::vector<unsigned char> buf(8 * std::max(nodes, 8 * cells));
  Eigen::ArrayXd corners(static_cast<Eigen::Index>(nodes));
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(8 * nodes));
  for (std::uint64_t i = 0; i < nodes; ++i) {
    corners[static_cast<Eigen::Index>(i)] = get_f64(buf.data() + 8 * i);
  }
  Eigen::Matrix<double, 8, Eigen::Dynamic> coeffs(8, static_cast<Eigen::Index>(cells));
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(64 * cells));
  for (std::uint64_t i = 0; i < 8 * cells; ++i) {
    coeffs.data()[i] = get_f64(buf.data() + 8 * i);
  }
  if (!in) throw Error(ErrorCode::kTruncated, "grid payload truncated");
  return DfGrid(spec, std::move(corners), std::move(coeffs));
}

}  // namespace dfloc
