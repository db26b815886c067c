#pragma once

#include "pngrasp/common.hpp"
#include "pngrasp/geometry/transform.hpp"

#include <array>
#include <cmath>
#include <optional>
#include <span>

namespace pngrasp {

using Triangle = std::array<int, 3>;

struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void extend(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void extend(const Aabb& b) {
    lo = lo.cwiseMin(b.lo);
    hi = hi.cwiseMax(b.hi);
  }
  bool empty() const { return (lo.array() > hi.array()).any(); }
  Vec3 center() const { return 0.5 * (lo + hi); }
  Vec3 extent() const { return hi - lo; }
  bool overlaps(const Aabb& b) const {
    return (lo.array() <= b.hi.array()).all() && (b.lo.array() <= hi.array()).all();
  }
};

inline constexpr double kMinTriangleArea = 1e-9;  // mm^2

/// Indexed triangle mesh in millimeters. Degenerate triangles are dropped
/// on construction; face normals follow the triangle winding.
class TriMesh {
 public:
  TriMesh() = default;

  TriMesh(std::vector<Vec3> vertices, const std::vector<Triangle>& triangles)
      : vertices_(std::move(vertices)) {
    triangles_.reserve(triangles.size());
    const int nv = static_cast<int>(vertices_.size());
    for (const Triangle& t : triangles) {
      for (int idx : t) {
        require(idx >= 0 && idx < nv, ErrorCode::InvalidArgument,
                "triangle index out of range");
      }
      const Vec3 c = (vertices_[t[1]] - vertices_[t[0]]).cross(vertices_[t[2]] - vertices_[t[0]]);
      const double area = 0.5 * c.norm();
      if (!(area > kMinTriangleArea)) continue;
      triangles_.push_back(t);
      normals_.push_back(c / c.norm());
      areas_.push_back(area);
    }
  }

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const std::vector<Vec3>& face_normals() const { return normals_; }
  const std::vector<double>& areas() const { return areas_; }

  std::size_t size() const { return triangles_.size(); }
  bool empty() const { return triangles_.empty(); }

  const Vec3& corner(std::size_t tri, int k) const { return vertices_[triangles_[tri][k]]; }

  double surface_area() const {
    double s = 0.0;
    for (double a : areas_) s += a;
    return s;
  }

  Aabb bounds() const {
    Aabb b;
    for (const Triangle& t : triangles_)
      for (int idx : t) b.extend(vertices_[idx]);
    return b;
  }

  Aabb triangle_bounds(std::size_t tri) const {
    Aabb b;
    for (int k = 0; k < 3; ++k) b.extend(corner(tri, k));
    return b;
  }

  Vec3 triangle_centroid(std::size_t tri) const {
    return (corner(tri, 0) + corner(tri, 1) + corner(tri, 2)) / 3.0;
  }

  TriMesh transformed(const RigidTransform& T) const {
    std::vector<Vec3> v;
    v.reserve(vertices_.size());
    for (const Vec3& p : vertices_) v.push_back(T.apply(p));
    return TriMesh(std::move(v), triangles_);
  }

  TriMesh scaled(double s) const {
    std::vector<Vec3> v;
    v.reserve(vertices_.size());
    for (const Vec3& p : vertices_) v.push_back(p * s);
    return TriMesh(std::move(v), triangles_);
  }

  TriMesh flipped() const {
    std::vector<Triangle> t = triangles_;
    for (Triangle& tri : t) std::swap(tri[1], tri[2]);
    return TriMesh(vertices_, t);
  }

  /// Volume enclosed relative to `ref`; translation independent iff closed.
  double signed_volume(const Vec3& ref = Vec3::Zero()) const {
    double v = 0.0;
    for (std::size_t i = 0; i < triangles_.size(); ++i) {
      const Vec3 a = corner(i, 0) - ref, b = corner(i, 1) - ref, c = corner(i, 2) - ref;
      v += a.dot(b.cross(c)) / 6.0;
    }
    return v;
  }

  /// Largest distance from `center` to any vertex referenced by a triangle.
  double max_radius(const Vec3& center) const {
    double r = 0.0;
    for (const Triangle& t : triangles_)
      for (int idx : t) r = std::max(r, (vertices_[idx] - center).norm());
    return r;
  }

  /// Concatenates two meshes.
  static TriMesh merge(std::span<const TriMesh> parts) {
    std::vector<Vec3> v;
    std::vector<Triangle> t;
    for (const TriMesh& m : parts) {
      const int base = static_cast<int>(v.size());
      v.insert(v.end(), m.vertices_.begin(), m.vertices_.end());
      for (Triangle tri : m.triangles_) {
        for (int& idx : tri) idx += base;
        t.push_back(tri);
      }
    }
    return TriMesh(std::move(v), t);
  }

 private:
  std::vector<Vec3> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<Vec3> normals_;
  std::vector<double> areas_;
};

/// Möller–Trumbore, double sided. Returns the ray parameter of the hit.
inline std::optional<double> intersect_ray_triangle(const Vec3& origin, const Vec3& dir,
                                                    const Vec3& a, const Vec3& b,
                                                    const Vec3& c) {
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const Vec3 pvec = dir.cross(e2);
  const double det = e1.dot(pvec);
  if (std::abs(det) < 1e-14 * e1.norm() * e2.norm() * dir.norm()) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3 tvec = origin - a;
  const double u = tvec.dot(pvec) * inv;
  if (u < 0.0 || u > 1.0) return std::nullopt;
  const Vec3 qvec = tvec.cross(e1);
  const double v = dir.dot(qvec) * inv;
  if (v < 0.0 || u + v > 1.0) return std::nullopt;
  return e2.dot(qvec) * inv;
}

/// Closest point on triangle abc to p (Ericson, Real-Time Collision Detection 5.1.5).
inline Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b,
                                      const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return a;
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + (d1 / (d1 - d3)) * ab;
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + (d2 / (d2 - d6)) * ac;
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0)
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

}  // namespace pngrasp
