#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <string>

#include <Eigen/Core>

#include "dfloc/geometry.hpp"

namespace dfloc {

/// Placement and size of the distance-field lattice, in the map frame.
struct GridSpec {
  Point3 origin = Point3::Zero();  ///< minimum corner
  double resolution = 0.05;        ///< cell edge, meters
  double margin = 1.0;             ///< padding used when planning, meters
  std::array<std::size_t, 3> cells{2, 2, 2};

  std::size_t cell_count() const { return cells[0] * cells[1] * cells[2]; }
  std::size_t node_count() const {
    return (cells[0] + 1) * (cells[1] + 1) * (cells[2] + 1);
  }
  Point3 extent() const {
    return Point3(double(cells[0]), double(cells[1]), double(cells[2])) * resolution;
  }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Trilinear coefficients a0..a7 of
///   a0 + a1 x + a2 y + a3 z + a4 xy + a5 xz + a6 yz + a7 xyz
/// in cell-local metric coordinates (origin at the cell's minimum corner).
using CellCoeffs = Eigen::Matrix<double, 8, 1>;

/// Interpolated distance and its spatial gradient. `inside == false` means the
/// query left the grid and both value and gradient are zero.
struct DfSample {
  double value = 0.0;
  Eigen::Vector3d gradient = Eigen::Vector3d::Zero();
  bool inside = false;
};

/// Corner distances in the fixed order: x fastest, then y, then z,
/// i.e. corner k sits at local offset (k & 1, (k >> 1) & 1, (k >> 2) & 1).
using CornerValues = Eigen::Matrix<double, 8, 1>;

CellCoeffs fit_cell_coeffs(const CornerValues& corners, double resolution);

/// Evaluates the trilinear polynomial at cell-local coordinates.
inline double eval_cell(const CellCoeffs& a, const Eigen::Vector3d& local) {
  const double x = local.x(), y = local.y(), z = local.z();
  return a[0] + a[1] * x + a[2] * y + a[3] * z + a[4] * x * y + a[5] * x * z +
         a[6] * y * z + a[7] * x * y * z;
}

inline Eigen::Vector3d eval_cell_gradient(const CellCoeffs& a,
                                          const Eigen::Vector3d& local) {
  const double x = local.x(), y = local.y(), z = local.z();
  return {a[1] + a[4] * y + a[5] * z + a[7] * y * z,
          a[2] + a[4] * x + a[6] * z + a[7] * x * z,
          a[3] + a[5] * x + a[6] * y + a[7] * x * y};
}

/// Picks a grid that covers the map's bounding box plus `margin` on every
/// side. A degenerate map still yields at least 2 cells per axis.
GridSpec plan_grid(const PointCloud& map, double resolution, double margin = 1.0);

/// Dense distance field: exact nearest-point distance at every lattice node
/// and precomputed trilinear coefficients for every cell.
class DfGrid {
 public:
  DfGrid(GridSpec spec, Eigen::ArrayXd corners, Eigen::Matrix<double, 8, Eigen::Dynamic> coeffs);

  const GridSpec& spec() const noexcept { return spec_; }
  const Eigen::ArrayXd& corners() const noexcept { return corners_; }
  const Eigen::Matrix<double, 8, Eigen::Dynamic>& coeffs() const noexcept {
    return coeffs_;
  }

  std::size_t node_index(std::size_t i, std::size_t j, std::size_t k) const {
    return i + (spec_.cells[0] + 1) * (j + (spec_.cells[1] + 1) * k);
  }
  std::size_t cell_index(std::size_t i, std::size_t j, std::size_t k) const {
    return i + spec_.cells[0] * (j + spec_.cells[1] * k);
  }
  double node_value(std::size_t i, std::size_t j, std::size_t k) const {
    return corners_[static_cast<Eigen::Index>(node_index(i, j, k))];
  }
  Point3 node_position(std::size_t i, std::size_t j, std::size_t k) const {
    return spec_.origin + spec_.resolution * Point3(double(i), double(j), double(k));
  }
  CellCoeffs cell(std::size_t i, std::size_t j, std::size_t k) const {
    return coeffs_.col(static_cast<Eigen::Index>(cell_index(i, j, k)));
  }

  bool contains(const Point3& x) const {
    return (x.array() >= spec_.origin.array()).all() && (x.array() <= upper_.array()).all();
  }

  /// Trilinear value and analytic gradient; zero sample outside the volume.
  DfSample query(const Point3& x) const {
    DfSample out;
    if (!contains(x)) return out;  // also rejects NaN
    std::size_t idx[3];
    for (int a = 0; a < 3; ++a) {
      const double rel = (x[a] - spec_.origin[a]) / spec_.resolution;
      idx[a] = std::min(static_cast<std::size_t>(rel), spec_.cells[a] - 1);
    }
    const Eigen::Vector3d local = x - node_position(idx[0], idx[1], idx[2]);
    const double* a = coeffs_.data() + 8 * cell_index(idx[0], idx[1], idx[2]);
    const double lx = local.x(), ly = local.y(), lz = local.z();
    out.value = a[0] + a[1] * lx + a[2] * ly + a[3] * lz + a[4] * lx * ly + a[5] * lx * lz +
                a[6] * ly * lz + a[7] * lx * ly * lz;
    out.gradient = {a[1] + a[4] * ly + a[5] * lz + a[7] * ly * lz,
                    a[2] + a[4] * lx + a[6] * lz + a[7] * lx * lz,
                    a[3] + a[5] * lx + a[6] * ly + a[7] * lx * ly};
    out.inside = true;
    return out;
  }

  friend bool operator==(const DfGrid& a, const DfGrid& b);

 private:
  GridSpec spec_;
  Eigen::ArrayXd corners_;
  Eigen::Matrix<double, 8, Eigen::Dynamic> coeffs_;
  Point3 upper_;
};

/// Fills every node with the exact distance to the nearest map point
/// (kd-tree accelerated) and fits per-cell coefficients.
DfGrid build_grid(const PointCloud& map, const GridSpec& spec);

/// Binary .df persistence; layout documented in FORMATS.md.
void save_grid(const DfGrid& grid, const std::filesystem::path& path);
DfGrid load_grid(const std::filesystem::path& path);

}  // namespace dfloc
