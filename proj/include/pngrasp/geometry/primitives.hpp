#pragma once

#include "pngrasp/geometry/bvh.hpp"
#include "pngrasp/geometry/mass.hpp"

#include <numbers>
#include <sstream>

namespace pngrasp {

/// Flips the winding so that face normals point out of the enclosed volume.
/// Closed meshes use the sign of the enclosed volume; open meshes use the
/// majority vote of which side of each face a ray escapes to.
inline TriMesh orient_outward(const TriMesh& mesh) {
  if (mesh.empty()) return mesh;
  const MassProperties mp = estimate_mass_properties(mesh);
  if (mp.watertight) {
    return mesh.signed_volume(mesh.bounds().center()) < 0 ? mesh.flipped() : mesh;
  }
  const IndexedMesh indexed(mesh);
  const double eps = 1e-6 * std::max(mesh.bounds().extent().maxCoeff(), 1.0);
  int outward = 0, inward = 0;
  const std::size_t stride = std::max<std::size_t>(1, mesh.size() / 512);
  for (std::size_t i = 0; i < mesh.size(); i += stride) {
    const Vec3 c = mesh.triangle_centroid(i);
    const Vec3& n = mesh.face_normals()[i];
    const bool front_escapes = !indexed.raycast(c + eps * n, n, 0.0).valid();
    const bool back_escapes = !indexed.raycast(c - eps * n, -n, 0.0).valid();
    if (front_escapes && !back_escapes) ++outward;
    if (back_escapes && !front_escapes) ++inward;
  }
  return inward > outward ? mesh.flipped() : mesh;
}

/// Axis-aligned box centered at the origin.
inline TriMesh make_box(double sx, double sy, double sz) {
  require(sx > 0 && sy > 0 && sz > 0, ErrorCode::InvalidArgument, "box extents must be positive");
  const double x = sx / 2, y = sy / 2, z = sz / 2;
  std::vector<Vec3> v = {{-x, -y, -z}, {x, -y, -z}, {x, y, -z}, {-x, y, -z},
                         {-x, -y, z},  {x, -y, z},  {x, y, z},  {-x, y, z}};
  std::vector<Triangle> t = {{0, 2, 1}, {0, 3, 2}, {4, 5, 6}, {4, 6, 7}, {0, 1, 5}, {0, 5, 4},
                             {1, 2, 6}, {1, 6, 5}, {2, 3, 7}, {2, 7, 6}, {3, 0, 4}, {3, 4, 7}};
  return TriMesh(std::move(v), t);
}

inline TriMesh make_cube(double side) { return make_box(side, side, side); }

/// Surface of revolution about +z. `profile` is a polyline of (radius, z)
/// pairs whose first and last points lie on the axis (radius 0).
inline TriMesh make_lathe(const std::vector<Eigen::Vector2d>& profile, int segments) {
  require(segments >= 3, ErrorCode::InvalidArgument, "lathe needs >= 3 segments");
  require(profile.size() >= 3 && profile.front().x() == 0.0 && profile.back().x() == 0.0,
          ErrorCode::InvalidArgument, "lathe profile must start and end on the axis");
  std::vector<Vec3> v;
  std::vector<std::vector<int>> rings;
  for (const auto& q : profile) {
    std::vector<int> ring;
    if (q.x() <= 0.0) {
      ring.assign(segments, static_cast<int>(v.size()));
      v.emplace_back(0.0, 0.0, q.y());
    } else {
      for (int s = 0; s < segments; ++s) {
        const double a = 2.0 * std::numbers::pi * s / segments;
        ring.push_back(static_cast<int>(v.size()));
        v.emplace_back(q.x() * std::cos(a), q.x() * std::sin(a), q.y());
      }
    }
    rings.push_back(std::move(ring));
  }
  std::vector<Triangle> t;
  for (std::size_t i = 0; i + 1 < rings.size(); ++i) {
    const auto& lo = rings[i];
    const auto& hi = rings[i + 1];
    for (int s = 0; s < segments; ++s) {
      const int s1 = (s + 1) % segments;
      if (lo[s] != lo[s1]) t.push_back({lo[s], lo[s1], hi[s1]});
      if (hi[s] != hi[s1]) t.push_back({lo[s], hi[s1], hi[s]});
    }
  }
  return orient_outward(TriMesh(std::move(v), t));
}

/// Solid cylinder about z, centered at the origin.
inline TriMesh make_cylinder(double radius, double height, int segments = 32) {
  require(radius > 0 && height > 0, ErrorCode::InvalidArgument, "cylinder dims must be positive");
  const double h = height / 2;
  return make_lathe({{0, -h}, {radius, -h}, {radius, h}, {0, h}}, segments);
}

/// UV sphere centered at the origin.
inline TriMesh make_sphere(double radius, int segments = 32) {
  require(radius > 0, ErrorCode::InvalidArgument, "sphere radius must be positive");
  const int rings = std::max(segments / 2, 2);
  std::vector<Eigen::Vector2d> profile;
  for (int i = 0; i <= rings; ++i) {
    const double a = -std::numbers::pi / 2 + std::numbers::pi * i / rings;
    profile.emplace_back(i == 0 || i == rings ? 0.0 : radius * std::cos(a), radius * std::sin(a));
  }
  return make_lathe(profile, segments);
}

/// Bowl: a spherical-cap shell of wall `thickness` standing on a flat foot,
/// rim at z = height, foot at z = 0.
inline TriMesh make_bowl(double radius, double height, double thickness, int segments = 32) {
  require(radius > 0 && height > 0 && thickness > 0 && thickness < radius && height <= radius,
          ErrorCode::InvalidArgument, "bowl needs 0 < thickness < radius and height <= radius");
  // Sphere of `radius` centered at z = radius; the bowl is its lower part.
  const int arc = std::max(segments / 4, 3);
  const double foot = 0.35 * radius;
  const double z_foot = radius - std::sqrt(radius * radius - foot * foot);
  std::vector<Eigen::Vector2d> profile;
  profile.emplace_back(0.0, 0.0);
  profile.emplace_back(foot, 0.0);
  const double a0 = std::asin(foot / radius);
  const double a1 = std::acos((radius - height) / radius);
  for (int i = 1; i <= arc; ++i) {
    const double a = a0 + (a1 - a0) * i / arc;
    profile.emplace_back(radius * std::sin(a), radius - radius * std::cos(a) - z_foot);
  }
  const double inner = radius - thickness;
  const double rim_z = height - z_foot;
  const double b1 = std::acos(std::clamp((radius - height) / inner, -1.0, 1.0));
  profile.emplace_back(inner * std::sin(b1), rim_z);
  for (int i = 1; i <= arc; ++i) {
    const double a = b1 * (arc - i) / arc;
    const double zz = std::max(radius - inner * std::cos(a) - z_foot, thickness);
    profile.emplace_back(i < arc ? inner * std::sin(a) : 0.0, zz);
  }
  return make_lathe(profile, segments);
}

/// Parses one primitive description:
///   box <sx> <sy> <sz> | cube <side> | cylinder <r> <h> [segments]
///   sphere <r> [segments] | bowl <r> <height> <thickness> [segments]
inline TriMesh parse_primitive(const std::string& text) {
  std::istringstream in(text);
  std::string kind;
  in >> kind;
  std::vector<double> args;
  double x;
  while (in >> x) args.push_back(x);
  require(in.eof(), ErrorCode::Format, "malformed primitive arguments: " + text);
  auto need = [&](std::size_t lo, std::size_t hi) {
    require(args.size() >= lo && args.size() <= hi, ErrorCode::Format,
            "wrong argument count for primitive: " + text);
  };
  auto segs = [&](std::size_t i, int def) {
    return args.size() > i ? static_cast<int>(args[i]) : def;
  };
  if (kind == "box") {
    need(3, 3);
    return make_box(args[0], args[1], args[2]);
  }
  if (kind == "cube") {
    need(1, 1);
    return make_cube(args[0]);
  }
  if (kind == "cylinder") {
    need(2, 3);
    return make_cylinder(args[0], args[1], segs(2, 32));
  }
  if (kind == "sphere") {
    need(1, 2);
    return make_sphere(args[0], segs(1, 32));
  }
  if (kind == "bowl") {
    need(3, 4);
    return make_bowl(args[0], args[1], args[2], segs(3, 32));
  }
  fail(ErrorCode::Format, "unknown primitive kind: " + kind);
}

}  // namespace pngrasp
