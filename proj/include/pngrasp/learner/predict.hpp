#pragma once

#include "pngrasp/geometry/gripper.hpp"
#include "pngrasp/learner/train.hpp"

namespace pngrasp {

inline constexpr double kCategoryThreshold = 0.573;

struct PredictConfig {
  double threshold = kCategoryThreshold;
  double crop_half = 200.0;  // mm, world x/y window; <= 0 disables cropping
  double max_depth = kMaxApproachDepth;
  GripperModel gripper;

  bool is_valid() const { return max_depth > 0 && gripper.is_valid(); }
};

struct PredictedGrasp {
  Grasp grasp;
  double score = 0;     // predicted q_c
  double category = 0;  // positive-class probability
  int source = -1;      // index into the cloud passed to predict
};

namespace detail {

inline bool point_in_box(const OrientedBox& b, const Vec3& p) {
  const Vec3 local = b.axes.transpose() * (p - b.center);
  return (local.cwiseAbs() - b.half).maxCoeff() < -kContactSlack;
}

inline bool cloud_collides(const GripperModel& gripper, const Grasp& g, std::span<const Vec3> cloud,
                           std::span<const int> candidates) {
  for (const OrientedBox& box : gripper.boxes(g)) {
    const Aabb bb = box.bounds();
    for (int i : candidates) {
      const Vec3& p = cloud[i];
      if ((p.array() < bb.lo.array()).any() || (p.array() > bb.hi.array()).any()) continue;
      if (point_in_box(box, p)) return true;
    }
  }
  return false;
}

}  // namespace detail

/// The mesh sweep of the planner with points in place of triangles: a
/// point strictly inside any gripper box blocks that depth.
inline double cloud_approach_sweep(std::span<const Vec3> cloud, const Vec3& point, const Vec3& approach,
                                   const Vec3& opening, const GripperModel& gripper, double sweep_limit) {
  require(sweep_limit > 0, ErrorCode::InvalidArgument, "sweep_limit must be positive");
  const double reach = sweep_limit + gripper.finger_length + gripper.palm_depth + gripper.max_opening +
                       gripper.finger_thickness + gripper.finger_width;
  std::vector<int> near;
  for (std::size_t i = 0; i < cloud.size(); ++i)
    if ((cloud[i] - point).squaredNorm() <= reach * reach) near.push_back(static_cast<int>(i));
  Grasp g{point, approach, opening, 0.0};
  if (detail::cloud_collides(gripper, g, cloud, near)) return 0.0;
  double free_depth = 0.0;
  while (free_depth < sweep_limit) {
    const double next = std::min(free_depth + kSweepStep, sweep_limit);
    g.depth = next;
    if (detail::cloud_collides(gripper, g, cloud, near)) {
      double lo = free_depth, hi = next;
      while (hi - lo > kSweepResolution) {
        g.depth = 0.5 * (lo + hi);
        if (detail::cloud_collides(gripper, g, cloud, near)) hi = g.depth;
        else lo = g.depth;
      }
      return lo;
    }
    free_depth = next;
  }
  return sweep_limit;
}

/// Crop, preprocess without jitter, run the network and turn every point
/// above the category threshold into a grasp, best predicted score first.
inline std::vector<PredictedGrasp> predict(std::span<const Vec3> cloud, const Checkpoint& c,
                                           const PredictConfig& cfg = {}, std::uint64_t seed = 0, int jobs = 1) {
  require(cfg.is_valid(), ErrorCode::InvalidArgument, "invalid prediction configuration");
  require(!cloud.empty(), ErrorCode::EmptyInput, "cannot predict on an empty cloud");
  std::vector<int> kept;
  std::vector<Vec3> cropped;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud[i];
    if (cfg.crop_half > 0 && (std::abs(p.x()) > cfg.crop_half || std::abs(p.y()) > cfg.crop_half)) continue;
    kept.push_back(static_cast<int>(i));
    cropped.push_back(p);
  }
  require(!cropped.empty(), ErrorCode::EmptyInput, "no points inside the crop window");

  const PreparedCloud prepared = preprocess(cropped, c.preprocess, seed, false);
  const Eigen::MatrixXd raw = forward(c.network, c.weights, prepared.xyz).out;
  const HeadOutputs h = decode_heads(raw);

  // Resampling with replacement repeats points; each source point yields one grasp.
  std::vector<char> seen(cropped.size(), 0);
  std::vector<PredictedGrasp> out;
  for (std::size_t k = 0; k < h.size(); ++k) {
    const int s = prepared.source[k];
    if (h.category[k] < cfg.threshold || seen[s]) continue;
    seen[s] = 1;
    PredictedGrasp pg;
    pg.source = kept[s];
    pg.score = h.score[k];
    pg.category = h.category[k];
    pg.grasp.point = cropped[s];
    pg.grasp.approach = h.normal[k];
    const Vec3 proj = project_out(h.rotation[k], pg.grasp.approach);
    pg.grasp.opening = proj.norm() >= kDegenerateProjection ? Vec3(proj.normalized()) : any_orthogonal(pg.grasp.approach);
    // Re-orthogonalize once more against rounding.
    pg.grasp.opening = project_out(pg.grasp.opening, pg.grasp.approach).normalized();
    out.push_back(pg);
  }
  parallel_for(out.size(), jobs, [&](std::size_t i) {
    Grasp& g = out[i].grasp;
    g.depth = approach_distance(cloud_approach_sweep(cropped, g.point, g.approach, g.opening, cfg.gripper, cfg.max_depth),
                                cfg.max_depth);
  });
  std::stable_sort(out.begin(), out.end(), [](const PredictedGrasp& a, const PredictedGrasp& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.source < b.source;
  });
  return out;
}

}  // namespace pngrasp
