#pragma once

#include "pngrasp/geometry/bvh.hpp"

#include <span>

namespace pngrasp {

/// Parallel-jaw grasp. `approach` points from the gripper into the surface
/// (the inward surface normal at `point`); `opening` is the finger closing
/// axis; `depth` is how far the fingertips advance past `point` along
/// `approach`.
struct Grasp {
  Vec3 point = Vec3::Zero();
  Vec3 approach = Vec3::UnitZ();
  Vec3 opening = Vec3::UnitX();
  double depth = 0.0;

  Vec3 binormal() const { return approach.cross(opening); }

  bool is_valid(double tol = 1e-6) const {
    return point.allFinite() && std::abs(approach.norm() - 1.0) <= tol &&
           std::abs(opening.norm() - 1.0) <= tol && std::abs(approach.dot(opening)) <= tol &&
           depth >= 0.0 && std::isfinite(depth);
  }

  Grasp transformed(const RigidTransform& T) const {
    return Grasp{T.apply(point), T.rotate(approach), T.rotate(opening), depth};
  }
};

struct OrientedBox {
  Vec3 center = Vec3::Zero();
  Mat3 axes = Mat3::Identity();  // columns are unit box axes
  Vec3 half = Vec3::Zero();

  Aabb bounds() const {
    const Vec3 r = axes.cwiseAbs() * half;
    return Aabb{center - r, center + r};
  }
};

/// Penetration slack: shapes that only touch (overlap <= this) do not collide.
inline constexpr double kContactSlack = 1e-7;  // mm

/// Separating-axis test between a triangle and an oriented box. Touching
/// contact within kContactSlack is not an intersection.
inline bool triangle_intersects_box(const Vec3& a, const Vec3& b, const Vec3& c,
                                    const OrientedBox& box) {
  const Mat3 Rt = box.axes.transpose();
  const Vec3 v0 = Rt * (a - box.center);
  const Vec3 v1 = Rt * (b - box.center);
  const Vec3 v2 = Rt * (c - box.center);
  const Vec3& h = box.half;

  auto separated = [&](const Vec3& axis) {
    const double len = axis.norm();
    if (len < 1e-12) return false;
    const double p0 = v0.dot(axis), p1 = v1.dot(axis), p2 = v2.dot(axis);
    const double r = h.x() * std::abs(axis.x()) + h.y() * std::abs(axis.y()) + h.z() * std::abs(axis.z());
    const double lo = std::min({p0, p1, p2});
    const double hi = std::max({p0, p1, p2});
    return lo >= r - kContactSlack * len || hi <= -r + kContactSlack * len;
  };

  for (int i = 0; i < 3; ++i) {
    if (separated(Vec3::Unit(i))) return false;
  }
  const Vec3 e0 = v1 - v0, e1 = v2 - v1, e2 = v0 - v2;
  if (separated(e0.cross(e1))) return false;
  for (const Vec3* e : {&e0, &e1, &e2}) {
    for (int i = 0; i < 3; ++i) {
      if (separated(Vec3::Unit(i).cross(*e))) return false;
    }
  }
  return true;
}

inline bool box_intersects_mesh(const OrientedBox& box, const IndexedMesh& mesh) {
  return mesh.any_triangle_in(box.bounds(), [&](int tri) {
    const TriMesh& m = mesh.mesh();
    return triangle_intersects_box(m.corner(tri, 0), m.corner(tri, 1), m.corner(tri, 2), box);
  });
}

/// Two-finger parallel jaw. Dimensions in mm. The fingers sit fully open at
/// +-max_opening/2 along the opening axis; the palm joins them behind.
struct GripperModel {
  double max_opening = 60.0;
  double finger_length = 50.0;
  double finger_thickness = 10.0;  // along the opening axis
  double finger_width = 10.0;      // along the binormal
  double palm_depth = 20.0;

  bool is_valid() const {
    return max_opening > 0 && finger_length > 0 && finger_thickness > 0 && finger_width > 0 &&
           palm_depth > 0;
  }

  /// Left finger, right finger, palm.
  std::array<OrientedBox, 3> boxes(const Grasp& g) const {
    Mat3 axes;
    axes.col(0) = g.approach;
    axes.col(1) = g.opening;
    axes.col(2) = g.binormal();
    const Vec3 tip = g.point + g.depth * g.approach;
    const double lateral = 0.5 * max_opening + 0.5 * finger_thickness;
    const Vec3 finger_mid = tip - 0.5 * finger_length * g.approach;
    std::array<OrientedBox, 3> out;
    out[0] = {finger_mid - lateral * g.opening, axes,
              Vec3(0.5 * finger_length, 0.5 * finger_thickness, 0.5 * finger_width)};
    out[1] = {finger_mid + lateral * g.opening, axes,
              Vec3(0.5 * finger_length, 0.5 * finger_thickness, 0.5 * finger_width)};
    out[2] = {tip - (finger_length + 0.5 * palm_depth) * g.approach, axes,
              Vec3(0.5 * palm_depth, 0.5 * max_opening + finger_thickness, 0.5 * finger_width)};
    return out;
  }
};

/// True iff any gripper box intersects any triangle of the scene.
inline bool collide(const GripperModel& gripper, const Grasp& grasp,
                    std::span<const IndexedMesh* const> scene) {
  const auto boxes = gripper.boxes(grasp);
  for (const IndexedMesh* mesh : scene) {
    const Aabb mb = mesh->bounds();
    for (const OrientedBox& box : boxes) {
      if (!mb.overlaps(box.bounds())) continue;
      if (box_intersects_mesh(box, *mesh)) return true;
    }
  }
  return false;
}

inline bool collide(const GripperModel& gripper, const Grasp& grasp, const IndexedMesh& mesh) {
  const IndexedMesh* one[] = {&mesh};
  return collide(gripper, grasp, one);
}

inline constexpr double kSweepStep = 1.0;        // mm
inline constexpr double kSweepResolution = 0.1;  // mm

/// Deepest collision-free fingertip depth when advancing along `approach`
/// from the standoff pose (depth 0): 1 mm steps, then bisection of the
/// first colliding step down to 0.1 mm.
inline double approach_sweep(std::span<const IndexedMesh* const> scene, const Vec3& point,
                             const Vec3& approach, const Vec3& opening,
                             const GripperModel& gripper, double sweep_limit) {
  require(sweep_limit > 0, ErrorCode::InvalidArgument, "sweep_limit must be positive");
  Grasp g{point, approach, opening, 0.0};
  if (collide(gripper, g, scene)) return 0.0;
  double free_depth = 0.0;
  while (free_depth < sweep_limit) {
    const double next = std::min(free_depth + kSweepStep, sweep_limit);
    g.depth = next;
    if (collide(gripper, g, scene)) {
      double lo = free_depth, hi = next;
      while (hi - lo > kSweepResolution) {
        g.depth = 0.5 * (lo + hi);
        if (collide(gripper, g, scene)) hi = g.depth;
        else lo = g.depth;
      }
      return lo;
    }
    free_depth = next;
  }
  return sweep_limit;
}

inline constexpr double kMaxApproachDepth = 40.0;  // mm

/// Executed approach depth: the deepest free depth, capped at d_max.
inline double approach_distance(double d_deepest, double d_max = kMaxApproachDepth) {
  require(d_deepest >= 0, ErrorCode::DomainError, "approach depth must be non-negative");
  return d_deepest < d_max ? d_deepest : d_max;
}

}  // namespace pngrasp
