#pragma once

#include "pngrasp/geometry/mesh.hpp"

#include <random>

namespace pngrasp {

struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;  // empty, or one per point

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_normals() const { return !normals.empty(); }

  bool is_valid(double normal_tol = 1e-6) const {
    if (has_normals() && normals.size() != points.size()) return false;
    for (const Vec3& p : points)
      if (!p.allFinite()) return false;
    for (const Vec3& n : normals)
      if (!n.allFinite() || std::abs(n.norm() - 1.0) > normal_tol) return false;
    return true;
  }
};

struct SurfaceSample {
  PointCloud cloud;
  std::vector<int> triangle;  // owning triangle per point
};

/// Area-weighted uniform sampling; normals are the owning face normals.
inline SurfaceSample sample_surface(const TriMesh& mesh, std::size_t n, std::uint64_t seed) {
  require(n >= 1, ErrorCode::InvalidArgument, "sample count must be >= 1");
  std::vector<double> cumulative(mesh.size());
  double total = 0.0;
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    total += mesh.areas()[i];
    cumulative[i] = total;
  }
  require(total > kMinTriangleArea, ErrorCode::EmptySampleDomain,
          "mesh has no surface area to sample");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  SurfaceSample out;
  out.cloud.points.reserve(n);
  out.cloud.normals.reserve(n);
  out.triangle.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double pick = uni(rng) * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
    if (it == cumulative.end()) --it;
    const auto tri = static_cast<std::size_t>(it - cumulative.begin());
    double u = uni(rng), v = uni(rng);
    if (u + v > 1.0) {
      u = 1.0 - u;
      v = 1.0 - v;
    }
    const Vec3& a = mesh.corner(tri, 0);
    const Vec3& b = mesh.corner(tri, 1);
    const Vec3& c = mesh.corner(tri, 2);
    out.cloud.points.push_back(a + u * (b - a) + v * (c - a));
    out.cloud.normals.push_back(mesh.face_normals()[tri]);
    out.triangle.push_back(static_cast<int>(tri));
  }
  return out;
}

}  // namespace pngrasp
