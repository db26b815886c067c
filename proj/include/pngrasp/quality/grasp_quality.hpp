#pragma once

#include "pngrasp/geometry/gripper.hpp"
#include "pngrasp/quality/ferrari_canny.hpp"

#include <optional>

namespace pngrasp {

struct QualityConfig {
  int cone_edges = 8;
  double torque_scale = 0.0;  // 1/mm; <= 0 selects 1 / (max centroid-to-vertex distance)
  double hull_tolerance = 1e-10;
  double patch_radius = 5.0;  // mm; soft-finger torsional friction, 0 disables

  bool is_valid() const { return cone_edges >= 3 && hull_tolerance > 0 && patch_radius >= 0; }
};

/// An object prepared for repeated quality queries.
struct GraspTarget {
  const IndexedMesh* mesh = nullptr;
  Vec3 centroid = Vec3::Zero();
  double mu = 0.2;
  double torque_scale = 1.0;

  static GraspTarget make(const IndexedMesh& mesh, const Vec3& centroid, double mu,
                          const QualityConfig& cfg = {}) {
    GraspTarget t;
    t.mesh = &mesh;
    t.centroid = centroid;
    t.mu = mu;
    if (cfg.torque_scale > 0) {
      t.torque_scale = cfg.torque_scale;
    } else {
      const double r = mesh.mesh().max_radius(centroid);
      require(r > 0, ErrorCode::InvalidArgument, "object has zero extent");
      t.torque_scale = 1.0 / r;
    }
    return t;
  }
};

/// Closes both fingers along the opening axis through the fingertip center
/// p + d n. Each finger starts at its fully open position and stops at the
/// first surface it enters. Returns nullopt when a finger crosses the whole
/// opening without contact or starts inside the object (object wider than
/// the opening).
inline std::optional<std::array<Contact, 2>> find_contacts(const Grasp& g, const IndexedMesh& object,
                                                          const GripperModel& gripper,
                                                          double mu = 0.2) {
  const double half = 0.5 * gripper.max_opening;
  const Vec3 center = g.point + g.depth * g.approach;
  std::array<Contact, 2> out;
  const Vec3 dirs[2] = {g.opening, -g.opening};
  for (int side = 0; side < 2; ++side) {
    const Vec3 start = center - half * dirs[side];
    const RayHit hit = object.raycast(start, dirs[side], 0.0, gripper.max_opening);
    if (!hit.valid()) return std::nullopt;
    const Vec3& outward = object.mesh().face_normals()[hit.triangle];
    if (!(outward.dot(dirs[side]) < 0)) return std::nullopt;
    out[side] = Contact{start + hit.t * dirs[side], -outward, mu, g.binormal()};
  }
  // Both fingers must meet the object from opposite sides.
  if ((out[1].position - out[0].position).dot(g.opening) < 0) return std::nullopt;
  return out;
}

/// Ferrari-Canny wrench set of a two-contact grasp about the target centroid.
inline std::vector<Wrench> grasp_wrenches(std::span<const Contact> contacts, const GraspTarget& target,
                                          const QualityConfig& cfg) {
  std::vector<Wrench> w = primitive_wrenches(contacts, target.centroid, cfg.cone_edges, target.torque_scale);
  for (const Wrench& t : torsional_wrenches(contacts, cfg.patch_radius, target.torque_scale)) w.push_back(t);
  return w;
}

/// find_contacts -> wrenches about the centroid -> Ferrari-Canny -> Q_b, Q_c.
inline QualityResult grasp_quality(const Grasp& g, const GraspTarget& target, const GripperModel& gripper,
                                   const QualityConfig& cfg = {}) {
  const auto contacts = find_contacts(g, *target.mesh, gripper, target.mu);
  if (!contacts) return combined_metric(0.0);
  const std::vector<Wrench> w = grasp_wrenches(*contacts, target, cfg);
  const FerrariCannyResult fc = ferrari_canny(w, cfg.hull_tolerance);
  QualityResult r = combined_metric(fc.q_fc);
  r.hull_failure = fc.hull_failure;
  return r;
}

}  // namespace pngrasp
