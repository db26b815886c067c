#pragma once

#include "pngrasp/common.hpp"

#include <limits>
#include <numeric>
#include <optional>
#include <span>

namespace pngrasp {

/// Static 3-d tree over a point set. Ties in distance resolve to the lower
/// point id, so every query has a unique answer matching a linear scan.
class KdTree {
 public:
  KdTree() = default;
  explicit KdTree(std::span<const Vec3> points) : points_(points.begin(), points.end()) {
    ids_.resize(points_.size());
    std::iota(ids_.begin(), ids_.end(), 0);
    if (!points_.empty()) build(0, static_cast<int>(ids_.size()), 0);
  }

  std::size_t size() const { return points_.size(); }
  const std::vector<Vec3>& points() const { return points_; }

  /// Closest point id, or nullopt for an empty tree.
  std::optional<int> nearest(const Vec3& q) const {
    Best best;
    search(q, 0, static_cast<int>(ids_.size()), 0, best);
    if (best.id < 0) return std::nullopt;
    return best.id;
  }

  /// Closest point within distance `radius` (inclusive), if any.
  std::optional<int> radius_nearest(const Vec3& q, double radius) const {
    Best best;
    best.d2 = radius * radius;
    best.inclusive = true;
    search(q, 0, static_cast<int>(ids_.size()), 0, best);
    if (best.id < 0) return std::nullopt;
    return best.id;
  }

  /// All ids within `radius`, sorted ascending.
  std::vector<int> radius_search(const Vec3& q, double radius) const {
    std::vector<int> out;
    collect(q, radius * radius, 0, static_cast<int>(ids_.size()), 0, out);
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  struct Best {
    double d2 = std::numeric_limits<double>::infinity();
    int id = -1;
    bool inclusive = false;  // accept d2 == bound even without a prior hit

    void offer(double cand, int cand_id) {
      if (cand < d2 || (cand == d2 && (id < 0 ? inclusive : cand_id < id))) {
        d2 = cand;
        id = cand_id;
      }
    }
  };

  // Subtree [lo, hi) of ids_; the median element is the node, split on depth % 3.
  void build(int lo, int hi, int depth) {
    if (hi - lo <= 1) return;
    const int axis = depth % 3;
    const int mid = lo + (hi - lo) / 2;
    std::nth_element(ids_.begin() + lo, ids_.begin() + mid, ids_.begin() + hi, [&](int a, int b) {
      const double pa = points_[a][axis], pb = points_[b][axis];
      return pa < pb || (pa == pb && a < b);
    });
    build(lo, mid, depth + 1);
    build(mid + 1, hi, depth + 1);
  }

  void search(const Vec3& q, int lo, int hi, int depth, Best& best) const {
    if (lo >= hi) return;
    const int mid = lo + (hi - lo) / 2;
    const int id = ids_[mid];
    best.offer((points_[id] - q).squaredNorm(), id);
    if (hi - lo == 1) return;
    const int axis = depth % 3;
    const double delta = q[axis] - points_[id][axis];
    const bool go_left = delta <= 0;
    if (go_left) {
      search(q, lo, mid, depth + 1, best);
      if (delta * delta <= best.d2) search(q, mid + 1, hi, depth + 1, best);
    } else {
      search(q, mid + 1, hi, depth + 1, best);
      if (delta * delta <= best.d2) search(q, lo, mid, depth + 1, best);
    }
  }

  void collect(const Vec3& q, double r2, int lo, int hi, int depth, std::vector<int>& out) const {
    if (lo >= hi) return;
    const int mid = lo + (hi - lo) / 2;
    const int id = ids_[mid];
    if ((points_[id] - q).squaredNorm() <= r2) out.push_back(id);
    if (hi - lo == 1) return;
    const int axis = depth % 3;
    const double delta = q[axis] - points_[id][axis];
    if (delta <= 0 || delta * delta <= r2) collect(q, r2, lo, mid, depth + 1, out);
    if (delta >= 0 || delta * delta <= r2) collect(q, r2, mid + 1, hi, depth + 1, out);
  }

  std::vector<Vec3> points_;
  std::vector<int> ids_;
};

}  // namespace pngrasp
