#include "dfloc/kdtree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace dfloc {

KdTree3::KdTree3(const PointCloud& points) : points_(points.points()) {
  if (points_.empty()) {
    throw Error(ErrorCode::kEmptyInput, "cannot index an empty cloud");
  }
  if (points_.size() > std::numeric_limits<std::uint32_t>::max() / 2) {
    throw Error(ErrorCode::kDimensionOverflow, "cloud too large to index");
  }
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  nodes_.reserve(2 * points_.size() / kLeafSize + 1);
  build(0, static_cast<std::uint32_t>(points_.size()));
}

std::uint32_t KdTree3::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  nodes_.emplace_back();
  nodes_[id].begin = begin;
  nodes_[id].end = end;
  if (end - begin <= kLeafSize) return id;

  Point3 lo = Point3::Constant(std::numeric_limits<double>::infinity());
  Point3 hi = -lo;
  for (std::uint32_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] == lo[axis]) return id;  // all coincident: keep as one leaf

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     return points_[a][axis] < points_[b][axis];
                   });
  nodes_[id].axis = axis;
  nodes_[id].split = points_[order_[mid]][axis];
  const std::uint32_t left = build(begin, mid);
  const std::uint32_t right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void KdTree3::search(std::uint32_t node_id, const Point3& q, std::size_t& best,
                     double& best_d2) const {
  const Node& node = nodes_[node_id];
  if (node.axis < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const std::uint32_t idx = order_[i];
      const double d2 = (q - points_[idx]).squaredNorm();
      if (d2 < best_d2) {
        best_d2 = d2;
        best = idx;
      }
    }
    return;
  }
  // Left subtree holds coordinates <= split, right holds >= split.
  const double diff = q[node.axis] - node.split;
  const std::uint32_t near = diff < 0.0 ? node.left : node.right;
  const std::uint32_t far = diff < 0.0 ? node.right : node.left;
  search(near, q, best, best_d2);
  if (diff * diff < best_d2) search(far, q, best, best_d2);
}

NearestResult KdTree3::nearest(const Point3& q) const {
  std::size_t best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  search(0, q, best, best_d2);
  return {points_[best], std::sqrt(best_d2), best};
}

NearestResult KdTree3::nearest(const Point3& q, std::size_t hint_index) const {
  std::size_t best = hint_index;
  double best_d2 = (q - points_[hint_index]).squaredNorm();
  search(0, q, best, best_d2);
  return {points_[best], std::sqrt(best_d2), best};
}

NearestResult brute_force_nearest(const PointCloud& points, const Point3& q) {
  if (points.empty()) {
    throw Error(ErrorCode::kEmptyInput, "brute_force_nearest on an empty cloud");
  }
  std::size_t best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double d2 = (q - points[i]).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  return {points[best], std::sqrt(best_d2), best};
}

}  // namespace dfloc
