#pragma once

#include "pngrasp/geometry/mass.hpp"
#include "pngrasp/geometry/mesh.hpp"
#include "pngrasp/geometry/transform.hpp"

#include <string>

namespace pngrasp {

/// A graspable model: mesh in its own frame plus physical attributes.
struct ObjectSpec {
  std::string id;
  TriMesh mesh;
  double mass = 0.0;  // g
  Vec3 centroid = Vec3::Zero();
  RigidTransform pose;  // initial pose in the world
  double mu = 0.2;

  static ObjectSpec make(std::string id, TriMesh mesh, double mu = 0.2,
                         double density = kDefaultDensity) {
    require(!mesh.empty(), ErrorCode::InvalidArgument, "object " + id + " has an empty mesh");
    require(mu >= 0, ErrorCode::InvalidArgument, "friction must be non-negative");
    ObjectSpec o;
    const MassProperties mp = estimate_mass_properties(mesh, density);
    o.id = std::move(id);
    o.mesh = std::move(mesh);
    o.mass = mp.mass;
    o.centroid = mp.centroid;
    o.mu = mu;
    return o;
  }
};

}  // namespace pngrasp
