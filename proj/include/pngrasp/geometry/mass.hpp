#pragma once

#include "pngrasp/geometry/mesh.hpp"

namespace pngrasp {

inline constexpr double kDefaultDensity = 0.5;  // g/cm^3

struct MassProperties {
  double volume = 0.0;  // mm^3
  double mass = 0.0;    // g
  Vec3 centroid = Vec3::Zero();
  bool watertight = true;  // false: centroid is the area-weighted surface centroid
};

namespace detail {

inline Vec3 surface_centroid(const TriMesh& mesh) {
  Vec3 c = Vec3::Zero();
  double area = 0.0;
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    c += mesh.areas()[i] * mesh.triangle_centroid(i);
    area += mesh.areas()[i];
  }
  return area > 0 ? Vec3(c / area) : c;
}

}  // namespace detail

/// Mass and centroid, falling back to the surface centroid (flagged) when
/// the signed volume depends on the reference point.
inline MassProperties estimate_mass_properties(const TriMesh& mesh,
                                               double density = kDefaultDensity) {
  require(density > 0, ErrorCode::DomainError, "density must be positive");
  MassProperties out;
  if (mesh.empty()) {
    out.watertight = false;
    return out;
  }
  const Aabb box = mesh.bounds();
  const double scale = box.extent().maxCoeff();
  const Vec3 origin = box.center();
  // A second reference point off every symmetry plane of typical meshes.
  const Vec3 shifted = origin + scale * Vec3(0.713, -1.291, 0.537);
  const double v0 = mesh.signed_volume(origin);
  const double v1 = mesh.signed_volume(shifted);
  const double tol = 1e-9 * std::max(scale * scale * scale, 1e-12);
  out.watertight = std::abs(v0 - v1) <= std::max(tol, 1e-9 * std::abs(v0)) && std::abs(v0) > tol;

  if (!out.watertight) {
    out.volume = std::abs(v0);
    out.mass = out.volume * 1e-3 * density;
    out.centroid = detail::surface_centroid(mesh);
    return out;
  }

  Vec3 moment = Vec3::Zero();
  double vol = 0.0;
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    const Vec3 a = mesh.corner(i, 0) - origin;
    const Vec3 b = mesh.corner(i, 1) - origin;
    const Vec3 c = mesh.corner(i, 2) - origin;
    const double v = a.dot(b.cross(c)) / 6.0;
    vol += v;
    moment += v * (a + b + c) / 4.0;
  }
  out.volume = std::abs(vol);
  out.mass = out.volume * 1e-3 * density;  // mm^3 -> cm^3
  out.centroid = origin + moment / vol;
  return out;
}

/// Mass (g) and volume centroid of a closed mesh; throws NonWatertight otherwise.
inline MassProperties mass_properties(const TriMesh& mesh, double density = kDefaultDensity) {
  MassProperties out = estimate_mass_properties(mesh, density);
  require(out.watertight, ErrorCode::NonWatertight,
          "mesh is not watertight: signed volume depends on the reference point");
  return out;
}

}  // namespace pngrasp
