#pragma once

#include "pngrasp/geometry/mesh.hpp"

#include <limits>
#include <numeric>

namespace pngrasp {

struct RayHit {
  double t = std::numeric_limits<double>::infinity();
  int triangle = -1;

  bool valid() const { return triangle >= 0; }
};

/// Triangle mesh paired with an axis-aligned bounding-volume hierarchy.
/// Immutable after construction; all queries are const and reentrant.
class IndexedMesh {
 public:
  IndexedMesh() = default;
  explicit IndexedMesh(TriMesh mesh) : mesh_(std::move(mesh)) { build(); }

  const TriMesh& mesh() const { return mesh_; }
  Aabb bounds() const { return nodes_.empty() ? Aabb{} : nodes_[0].box; }

  /// Nearest hit with t in [t_min, t_max].
  RayHit raycast(const Vec3& origin, const Vec3& dir, double t_min = 0.0,
                 double t_max = std::numeric_limits<double>::infinity()) const {
    RayHit best;
    best.t = t_max;
    if (nodes_.empty()) return RayHit{};
    const Vec3 inv(1.0 / dir.x(), 1.0 / dir.y(), 1.0 / dir.z());
    int stack[64];
    int top = 0;
    stack[top++] = 0;
    bool found = false;
    while (top > 0) {
      const Node& node = nodes_[stack[--top]];
      if (!slab_test(node.box, origin, inv, t_min, best.t)) continue;
      if (node.count > 0) {
        for (int i = node.first; i < node.first + node.count; ++i) {
          const int tri = order_[i];
          const auto t = intersect_ray_triangle(origin, dir, mesh_.corner(tri, 0),
                                                mesh_.corner(tri, 1), mesh_.corner(tri, 2));
          if (!t || *t < t_min || *t > t_max) continue;
          if (!found || *t < best.t || (*t == best.t && tri < best.triangle)) {
            best.t = *t;
            best.triangle = tri;
            found = true;
          }
        }
      } else {
        stack[top++] = node.left;
        stack[top++] = node.left + 1;
      }
    }
    return found ? best : RayHit{};
  }

  /// Calls fn(tri) for every triangle whose bounding box overlaps `box`.
  template <typename Fn>
  bool any_triangle_in(const Aabb& box, Fn&& fn) const {
    if (nodes_.empty()) return false;
    int stack[64];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
      const Node& node = nodes_[stack[--top]];
      if (!node.box.overlaps(box)) continue;
      if (node.count > 0) {
        for (int i = node.first; i < node.first + node.count; ++i) {
          if (tri_boxes_[order_[i]].overlaps(box) && fn(order_[i])) return true;
        }
      } else {
        stack[top++] = node.left;
        stack[top++] = node.left + 1;
      }
    }
    return false;
  }

  /// Squared distance from p to the closest surface point.
  double squared_distance(const Vec3& p, Vec3* closest = nullptr) const {
    double best = std::numeric_limits<double>::infinity();
    if (nodes_.empty()) return best;
    int stack[64];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
      const Node& node = nodes_[stack[--top]];
      const Vec3 q = p.cwiseMax(node.box.lo).cwiseMin(node.box.hi);
      if ((q - p).squaredNorm() > best) continue;
      if (node.count > 0) {
        for (int i = node.first; i < node.first + node.count; ++i) {
          const int tri = order_[i];
          const Vec3 c = closest_point_on_triangle(p, mesh_.corner(tri, 0), mesh_.corner(tri, 1),
                                                   mesh_.corner(tri, 2));
          const double d2 = (c - p).squaredNorm();
          if (d2 < best) {
            best = d2;
            if (closest) *closest = c;
          }
        }
      } else {
        const Node& a = nodes_[node.left];
        const Node& b = nodes_[node.left + 1];
        const double da = (p.cwiseMax(a.box.lo).cwiseMin(a.box.hi) - p).squaredNorm();
        const double db = (p.cwiseMax(b.box.lo).cwiseMin(b.box.hi) - p).squaredNorm();
        // Push the farther child first so the nearer one is visited next.
        if (da < db) {
          stack[top++] = node.left + 1;
          stack[top++] = node.left;
        } else {
          stack[top++] = node.left;
          stack[top++] = node.left + 1;
        }
      }
    }
    return best;
  }

 private:
  struct Node {
    Aabb box;
    int left = -1;  // index of first child; children are adjacent
    int first = 0;
    int count = 0;  // > 0 for leaves
  };

  static bool slab_test(const Aabb& b, const Vec3& o, const Vec3& inv, double t0, double t1) {
    for (int a = 0; a < 3; ++a) {
      double ta = (b.lo[a] - o[a]) * inv[a];
      double tb = (b.hi[a] - o[a]) * inv[a];
      if (std::isnan(ta) || std::isnan(tb)) {
        // Ray parallel to the slab and starting on its plane.
        if (o[a] < b.lo[a] || o[a] > b.hi[a]) return false;
        continue;
      }
      if (ta > tb) std::swap(ta, tb);
      t0 = std::max(t0, ta);
      t1 = std::min(t1, tb);
      // Slack so that hits exactly on a box face are not culled.
      if (t0 > t1 * (1 + 1e-12) + 1e-12) return false;
    }
    return true;
  }

  void build() {
    const int n = static_cast<int>(mesh_.size());
    if (n == 0) return;
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), 0);
    tri_boxes_.resize(n);
    centroids_.resize(n);
    for (int i = 0; i < n; ++i) {
      tri_boxes_[i] = mesh_.triangle_bounds(i);
      centroids_[i] = mesh_.triangle_centroid(i);
    }
    nodes_.reserve(2 * n);
    nodes_.push_back(Node{});
    build_node(0, 0, n, 0);
  }

  void build_node(int index, int first, int count, int depth) {
    Aabb box, cbox;
    for (int i = first; i < first + count; ++i) {
      box.extend(tri_boxes_[order_[i]]);
      cbox.extend(centroids_[order_[i]]);
    }
    nodes_[index].box = box;
    if (count <= 4 || depth >= 48) {
      nodes_[index].first = first;
      nodes_[index].count = count;
      return;
    }
    const Vec3 ext = cbox.extent();
    int axis = 0;
    if (ext[1] > ext[axis]) axis = 1;
    if (ext[2] > ext[axis]) axis = 2;
    const int mid = first + count / 2;
    std::nth_element(order_.begin() + first, order_.begin() + mid, order_.begin() + first + count,
                     [&](int a, int b) {
                       const double ca = centroids_[a][axis], cb = centroids_[b][axis];
                       return ca < cb || (ca == cb && a < b);
                     });
    const int left = static_cast<int>(nodes_.size());
    nodes_[index].left = left;
    nodes_.push_back(Node{});
    nodes_.push_back(Node{});
    build_node(left, first, mid - first, depth + 1);
    build_node(left + 1, mid, first + count - mid, depth + 1);
  }

  TriMesh mesh_;
  std::vector<Node> nodes_;
  std::vector<int> order_;
  std::vector<Aabb> tri_boxes_;
  std::vector<Vec3> centroids_;
};

/// Reference nearest-hit search over every triangle.
inline RayHit raycast_naive(const TriMesh& mesh, const Vec3& origin, const Vec3& dir,
                            double t_min = 0.0,
                            double t_max = std::numeric_limits<double>::infinity()) {
  RayHit best;
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    const auto t = intersect_ray_triangle(origin, dir, mesh.corner(i, 0), mesh.corner(i, 1),
                                          mesh.corner(i, 2));
    if (!t || *t < t_min || *t > t_max) continue;
    if (!best.valid() || *t < best.t) {
      best.t = *t;
      best.triangle = static_cast<int>(i);
    }
  }
  return best;
}

}  // namespace pngrasp
