#pragma once

#include <cstdint>
#include <vector>

#include "dfloc/geometry.hpp"

namespace dfloc {

struct NearestResult {
  Point3 point;
  double distance = 0.0;
  std::size_t index = 0;  ///< position of `point` in the indexed cloud
};

/// Exact 3D nearest-neighbour index. Splits at the median of the axis with the
/// widest spread; leaves hold at most kLeafSize points. Immutable after build.
class KdTree3 {
 public:
  static constexpr std::size_t kLeafSize = 16;

  /// Throws kEmptyInput on an empty cloud.
  explicit KdTree3(const PointCloud& points);

  NearestResult nearest(const Point3& q) const;

  /// Same as nearest(), seeded with a known candidate to tighten pruning early.
  /// The result is still exact.
  NearestResult nearest(const Point3& q, std::size_t hint_index) const;

  std::size_t size() const noexcept { return points_.size(); }
  const std::vector<Point3>& points() const noexcept { return points_; }

 private:
  struct Node {
    // Leaf when axis < 0: [begin, end) indexes into order_.
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t axis = -1;
    double split = 0.0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
  };

  std::uint32_t build(std::uint32_t begin, std::uint32_t end);
  void search(std::uint32_t node, const Point3& q, std::size_t& best,
              double& best_d2) const;

  std::vector<Point3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

inline KdTree3 build_index(const PointCloud& points) { return KdTree3(points); }

/// Linear scan. Throws kEmptyInput on an empty cloud.
NearestResult brute_force_nearest(const PointCloud& points, const Point3& q);

}  // namespace dfloc
