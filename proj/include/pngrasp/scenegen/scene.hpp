#pragma once

#include "pngrasp/geometry/bvh.hpp"
#include "pngrasp/planner/object_spec.hpp"
#include "pngrasp/quality/convex_hull.hpp"

#include <memory>
#include <numbers>
#include <random>

namespace pngrasp {

struct PlacedObject {
  int model = 0;  // index into the model list
  std::string id;
  RigidTransform pose;  // model frame -> world
};

/// A settled arrangement inside the totebox, resting on the ground z = 0.
struct SceneSpec {
  std::vector<PlacedObject> objects;
  double totebox_half = 100.0;  // mm
  Vec3 center = Vec3::Zero();   // o_w
  int requested = 0;
  int placement_failures = 0;
};

struct ComposerConfig {
  double totebox_half = 100.0;  // mm
  double max_height = 300.0;    // mm; taller stacks count as a failed attempt
  int max_attempts = 100;
  double edge_spacing = 0.5;    // mm between contact probes along mesh edges

  bool is_valid() const { return totebox_half > 0 && max_height > 0 && max_attempts >= 1 && edge_spacing > 0; }
};

/// A resting orientation: the model frame rotated so `down` maps to -z.
struct StablePose {
  Vec3 down = -Vec3::UnitZ();  // outward normal of the support face, model frame
  Mat3 rotation = Mat3::Identity();
};

namespace detail {

// Andrew's monotone chain; returns the hull counter-clockwise.
inline std::vector<Eigen::Vector2d> convex_hull_2d(std::vector<Eigen::Vector2d> pts) {
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    return a.x() != b.x() ? a.x() < b.x() : a.y() < b.y();
  });
  if (pts.size() < 3) return pts;
  auto cross = [](const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  std::vector<Eigen::Vector2d> h(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  h.resize(k - 1);
  return h;
}

// Signed distance from q to the polygon boundary, positive strictly inside.
inline double inside_margin(const std::vector<Eigen::Vector2d>& poly, const Eigen::Vector2d& q) {
  if (poly.size() < 3) return -1.0;
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Eigen::Vector2d& a = poly[i];
    const Eigen::Vector2d& b = poly[(i + 1) % poly.size()];
    const Eigen::Vector2d e = b - a;
    const double len = e.norm();
    if (len == 0) continue;
    margin = std::min(margin, (e.x() * (q.y() - a.y()) - e.y() * (q.x() - a.x())) / len);
  }
  return margin;
}

// Probe points: vertices plus points spaced along every edge.
inline std::vector<Vec3> contact_probes(const TriMesh& mesh, double spacing) {
  std::vector<Vec3> out = mesh.vertices();
  for (std::size_t t = 0; t < mesh.size(); ++t) {
    for (int k = 0; k < 3; ++k) {
      const int a = mesh.triangles()[t][k], b = mesh.triangles()[t][(k + 1) % 3];
      if (a > b) continue;  // each shared edge once
      const Vec3& pa = mesh.vertices()[a];
      const Vec3& pb = mesh.vertices()[b];
      const int steps = static_cast<int>(std::ceil((pb - pa).norm() / spacing));
      for (int s = 1; s < steps; ++s) out.push_back(pa + (pb - pa) * (static_cast<double>(s) / steps));
    }
  }
  return out;
}

}  // namespace detail

/// Resting orientations from convex-hull faces whose support polygon
/// strictly contains the projected centroid. Faces are merged by normal.
inline std::vector<StablePose> stable_poses(const TriMesh& mesh, const Vec3& centroid) {
  const auto hull = ConvexHull<3>::build(mesh.vertices());
  const double scale = mesh.bounds().extent().maxCoeff();
  const double plane_tol = 1e-6 * scale;
  std::vector<std::pair<Vec3, double>> planes;
  for (const auto& f : hull.facets()) {
    bool dup = false;
    for (const auto& [n, off] : planes)
      if (n.dot(f.normal) > 1 - 1e-9 && std::abs(off - f.offset) <= plane_tol) dup = true;
    if (!dup) planes.emplace_back(f.normal, f.offset);
  }
  std::sort(planes.begin(), planes.end(), [](const auto& a, const auto& b) {
    for (int i = 0; i < 3; ++i)
      if (a.first[i] != b.first[i]) return a.first[i] < b.first[i];
    return a.second < b.second;
  });
  std::vector<StablePose> out;
  for (const auto& [n, off] : planes) {
    const Vec3 u = any_orthogonal(n);
    const Vec3 v = n.cross(u);
    std::vector<Eigen::Vector2d> support;
    for (const Vec3& p : mesh.vertices())
      if (std::abs(n.dot(p) - off) <= plane_tol) support.emplace_back(u.dot(p), v.dot(p));
    const auto poly = detail::convex_hull_2d(support);
    if (detail::inside_margin(poly, Eigen::Vector2d(u.dot(centroid), v.dot(centroid))) > 1e-6 * scale)
      out.push_back(StablePose{n, rotation_between(n, -Vec3::UnitZ())});
  }
  return out;
}

inline TriMesh ground_mesh(double half = 1000.0) {
  return TriMesh({{-half, -half, 0}, {half, -half, 0}, {half, half, 0}, {-half, half, 0}}, {{0, 1, 2}, {0, 2, 3}});
}

/// World-frame geometry of a scene: object meshes first, ground last.
struct SceneGeometry {
  std::vector<std::unique_ptr<IndexedMesh>> objects;
  IndexedMesh ground;

  SceneGeometry(const SceneSpec& scene, std::span<const ObjectSpec> models) : ground(ground_mesh()) {
    for (const PlacedObject& p : scene.objects)
      objects.push_back(std::make_unique<IndexedMesh>(models[p.model].mesh.transformed(p.pose)));
  }

  /// Pointers for collision and rendering; index 0 is the ground, object i is i + 1.
  std::vector<const IndexedMesh*> all() const {
    std::vector<const IndexedMesh*> out{&ground};
    for (const auto& o : objects) out.push_back(o.get());
    return out;
  }
};

/// Quasi-static composition: m models drawn with replacement, each given a
/// random stable orientation and yaw, a random XY keeping its footprint in
/// the totebox, then lowered along -z to first contact.
inline SceneSpec compose_scene(std::span<const ObjectSpec> models, int m, std::uint64_t seed,
                               const ComposerConfig& cfg = {}) {
  require(m >= 1, ErrorCode::InvalidArgument, "scene needs at least one object");
  require(!models.empty(), ErrorCode::InvalidArgument, "no models to compose");
  require(cfg.is_valid(), ErrorCode::InvalidArgument, "invalid composer configuration");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SceneSpec scene;
  scene.totebox_half = cfg.totebox_half;
  scene.requested = m;

  std::vector<std::vector<StablePose>> poses(models.size());
  std::vector<std::unique_ptr<IndexedMesh>> placed;
  std::vector<std::vector<Vec3>> placed_probes;
  double stack_top = 0.0;

  for (int k = 0; k < m; ++k) {
    const int model = static_cast<int>(std::min<double>(unit(rng) * models.size(), models.size() - 1));
    const ObjectSpec& obj = models[model];
    if (poses[model].empty()) {
      poses[model] = stable_poses(obj.mesh, obj.centroid);
      if (poses[model].empty()) {
        // Degenerate support everywhere: fall back to the face nearest the centroid.
        const auto hull = ConvexHull<3>::build(obj.mesh.vertices());
        const auto& f = *std::min_element(hull.facets().begin(), hull.facets().end(), [&](const auto& a, const auto& b) {
          return a.offset - a.normal.dot(obj.centroid) < b.offset - b.normal.dot(obj.centroid);
        });
        poses[model].push_back(StablePose{f.normal, rotation_between(f.normal, -Vec3::UnitZ())});
      }
    }
    bool done = false;
    for (int attempt = 0; attempt < cfg.max_attempts && !done; ++attempt) {
      const auto& sp = poses[model][std::min<std::size_t>(
          static_cast<std::size_t>(unit(rng) * poses[model].size()), poses[model].size() - 1)];
      const double yaw = 2.0 * std::numbers::pi * unit(rng);
      const double ux = unit(rng), uy = unit(rng);
      RigidTransform T;
      T.rotation = Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix() * sp.rotation;
      T.translation = -T.rotation * obj.centroid;
      Aabb box;
      for (const Vec3& p : obj.mesh.vertices()) box.extend(T.apply(p));
      const Vec3 half = 0.5 * box.extent();
      const double H = cfg.totebox_half;
      if (half.x() > H || half.y() > H) continue;
      const double cx = -H + half.x() + ux * 2.0 * (H - half.x());
      const double cy = -H + half.y() + uy * 2.0 * (H - half.y());
      // Start clear above everything placed so far.
      T.translation += Vec3(cx - box.center().x(), cy - box.center().y(), stack_top + 1.0 - box.lo.z());

      const TriMesh moving = obj.mesh.transformed(T);
      const IndexedMesh moving_idx(moving);
      const std::vector<Vec3> probes = detail::contact_probes(moving, cfg.edge_spacing);
      double drop = moving.bounds().lo.z();  // ground contact
      for (std::size_t j = 0; j < placed.size(); ++j) {
        if (!placed[j]->bounds().overlaps(Aabb{moving.bounds().lo - Vec3(0, 0, 1e6), moving.bounds().hi}))
          continue;
        for (const Vec3& q : probes) {
          const RayHit h = placed[j]->raycast(q, -Vec3::UnitZ(), 0.0, drop);
          if (h.valid()) drop = std::min(drop, h.t);
        }
        for (const Vec3& q : placed_probes[j]) {
          const RayHit h = moving_idx.raycast(q, Vec3::UnitZ(), 0.0, drop);
          if (h.valid()) drop = std::min(drop, h.t);
        }
      }
      T.translation.z() -= drop;
      const TriMesh rest = obj.mesh.transformed(T);
      if (rest.bounds().hi.z() > cfg.max_height) continue;
      stack_top = std::max(stack_top, rest.bounds().hi.z());
      placed_probes.push_back(detail::contact_probes(rest, cfg.edge_spacing));
      placed.push_back(std::make_unique<IndexedMesh>(rest));
      scene.objects.push_back(PlacedObject{model, obj.id, T});
      done = true;
    }
    if (!done) ++scene.placement_failures;
  }
  return scene;
}

}  // namespace pngrasp
