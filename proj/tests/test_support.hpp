#pragma once

#include "pngrasp/geometry.hpp"

#include <random>

namespace pngrasp::testing {

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  for (;;) {
    Vec3 v(g(rng), g(rng), g(rng));
    if (v.norm() > 1e-6) return v.normalized();
  }
}

inline Vec3 random_point(std::mt19937_64& rng, double half) {
  std::uniform_real_distribution<double> u(-half, half);
  return Vec3(u(rng), u(rng), u(rng));
}

inline RigidTransform random_transform(std::mt19937_64& rng, double half) {
  std::uniform_real_distribution<double> ang(0.0, 3.0);
  return RigidTransform::from_axis_angle(random_unit(rng), ang(rng), random_point(rng, half));
}

inline Grasp random_grasp(std::mt19937_64& rng, double half, double max_depth) {
  Grasp g;
  g.point = random_point(rng, half);
  g.approach = random_unit(rng);
  const Vec3 t = random_unit(rng);
  g.opening = (t - t.dot(g.approach) * g.approach).normalized();
  std::uniform_real_distribution<double> d(0.0, max_depth);
  g.depth = d(rng);
  return g;
}

inline TriMesh ground_plane(double half = 2000.0) {
  return TriMesh({{-half, -half, 0}, {half, -half, 0}, {half, half, 0}, {-half, half, 0}},
                 {{0, 1, 2}, {0, 2, 3}});
}

/// Camera above the origin at height h looking straight down.
inline Camera downward_camera(double h, CameraIntrinsics K) {
  Camera cam;
  cam.intrinsics = K;
  cam.pose.rotation.col(0) = Vec3::UnitX();
  cam.pose.rotation.col(1) = -Vec3::UnitY();
  cam.pose.rotation.col(2) = -Vec3::UnitZ();
  cam.pose.translation = Vec3(0, 0, h);
  return cam;
}

/// Triangle/box overlap by Sutherland–Hodgman clipping of the triangle
/// against the six box slabs (shrunk by `shrink`): overlapping iff any
/// polygon survives.
inline bool triangle_box_overlap_by_clipping(const Vec3& a, const Vec3& b, const Vec3& c,
                                             const OrientedBox& box, double shrink = 1e-6) {
  std::vector<Vec3> poly;
  for (const Vec3* p : {&a, &b, &c}) poly.push_back(box.axes.transpose() * (*p - box.center));
  for (int axis = 0; axis < 3; ++axis) {
    for (double sign : {1.0, -1.0}) {
      const double limit = box.half[axis] - shrink;
      std::vector<Vec3> out;
      for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec3& p = poly[i];
        const Vec3& q = poly[(i + 1) % poly.size()];
        const double dp = sign * p[axis] - limit;
        const double dq = sign * q[axis] - limit;
        if (dp <= 0) out.push_back(p);
        if ((dp < 0 && dq > 0) || (dp > 0 && dq < 0)) out.push_back(p + (q - p) * (dp / (dp - dq)));
      }
      poly = std::move(out);
      if (poly.empty()) return false;
    }
  }
  return true;
}

inline bool collide_oracle(const GripperModel& gripper, const Grasp& g,
                           const std::vector<TriMesh>& scene) {
  for (const OrientedBox& box : gripper.boxes(g)) {
    for (const TriMesh& m : scene) {
      for (std::size_t t = 0; t < m.size(); ++t) {
        if (triangle_box_overlap_by_clipping(m.corner(t, 0), m.corner(t, 1), m.corner(t, 2), box))
          return true;
      }
    }
  }
  return false;
}

}  // namespace pngrasp::testing
