#pragma once

#include "pngrasp/common.hpp"

#include <cmath>
#include <numbers>
#include <span>

namespace pngrasp {

/// Frictional point contact on an object surface.
struct Contact {
  Vec3 position = Vec3::Zero();
  Vec3 inward_normal = Vec3::UnitZ();  // direction the finger pushes
  double mu = 0.2;
  // Azimuth reference for the discretized cone; zero picks an arbitrary
  // tangent. Set it from a body-fixed frame when rigid invariance matters.
  Vec3 tangent = Vec3::Zero();

  bool is_valid(double tol = 1e-6) const {
    return position.allFinite() && std::abs(inward_normal.norm() - 1.0) <= tol && mu >= 0;
  }
};

/// Force (normalized) and torque (scaled by 1/length) about a reference point.
struct Wrench {
  Vec3 force = Vec3::Zero();
  Vec3 torque = Vec3::Zero();

  using Vector6 = Eigen::Matrix<double, 6, 1>;
  Vector6 vector() const {
    Vector6 w;
    w << force, torque;
    return w;
  }
  bool is_finite() const { return force.allFinite() && torque.allFinite(); }
};

/// k unit edge directions of the linearized Coulomb cone about the inward
/// normal, half-angle atan(mu), evenly spaced in azimuth.
inline std::vector<Vec3> friction_cone(const Contact& c, int k) {
  require(k >= 3, ErrorCode::InvalidArgument, "friction cone needs k >= 3 edges");
  const Vec3 n = c.inward_normal.normalized();
  Vec3 u = c.tangent - c.tangent.dot(n) * n;
  u = u.norm() > 1e-9 ? Vec3(u.normalized()) : any_orthogonal(n);
  const Vec3 v = n.cross(u);
  const double half_angle = std::atan(c.mu);
  const double ca = std::cos(half_angle), sa = std::sin(half_angle);
  std::vector<Vec3> out;
  out.reserve(k);
  for (int j = 0; j < k; ++j) {
    const double theta = 2.0 * std::numbers::pi * j / k;
    out.push_back((ca * n + sa * (std::cos(theta) * u + std::sin(theta) * v)).normalized());
  }
  return out;
}

/// Cone-edge wrenches (f, lambda * (x - origin) x f) for every contact.
inline std::vector<Wrench> primitive_wrenches(std::span<const Contact> contacts,
                                              const Vec3& torque_origin, int cone_edges,
                                              double torque_scale) {
  require(torque_scale > 0, ErrorCode::InvalidArgument, "torque scale must be positive");
  std::vector<Wrench> out;
  out.reserve(contacts.size() * cone_edges);
  for (const Contact& c : contacts) {
    const Vec3 arm = torque_scale * (c.position - torque_origin);
    for (const Vec3& f : friction_cone(c, cone_edges)) out.push_back(Wrench{f, arm.cross(f)});
  }
  return out;
}

/// Soft-finger torsional wrenches (0, +-lambda * mu * patch_radius * n) per
/// contact: friction over a contact patch resists spin about the normal.
inline std::vector<Wrench> torsional_wrenches(std::span<const Contact> contacts,
                                              double patch_radius, double torque_scale) {
  std::vector<Wrench> out;
  if (patch_radius <= 0) return out;
  for (const Contact& c : contacts) {
    const Vec3 t = torque_scale * c.mu * patch_radius * c.inward_normal.normalized();
    if (t.norm() == 0) continue;
    out.push_back(Wrench{Vec3::Zero(), t});
    out.push_back(Wrench{Vec3::Zero(), -t});
  }
  return out;
}

}  // namespace pngrasp
