#pragma once

#include "pngrasp/geometry/gripper.hpp"
#include "pngrasp/geometry/sampling.hpp"
#include "pngrasp/planner/object_spec.hpp"
#include "pngrasp/quality/grasp_quality.hpp"

#include <numbers>
#include <optional>

namespace pngrasp {

struct PlannerConfig {
  int samples = 300;          // N
  int rotations = 36;         // N_r
  double min_depth = 20.0;    // D_min, mm
  double supp_step = 1.0;     // mm
  double mu = 0.2;  // default friction for objects built from this config
  double sweep_limit = kMaxApproachDepth;  // mm; depths beyond d_max are never used
  double max_depth = kMaxApproachDepth;    // d_max, mm
  QualityConfig quality;

  bool is_valid() const {
    return samples >= 1 && rotations >= 1 && min_depth > 0 && supp_step > 0 && mu >= 0 &&
           sweep_limit >= min_depth && max_depth >= min_depth && quality.is_valid();
  }
};

struct ScoredGrasp {
  Grasp grasp;
  double q_c = 0.0;
};

/// Outcome at one sampled surface point.
struct PointPlan {
  Vec3 point = Vec3::Zero();
  Vec3 approach = Vec3::UnitZ();  // inward surface normal
  std::optional<ScoredGrasp> major;
  std::vector<ScoredGrasp> supplementary;  // q_c > 0, non-increasing
  int valid_rotations = 0;
  int scored = 0;

  bool positive() const { return major.has_value(); }
};

struct MajorGrasp {
  int sample = 0;  // index into the planner's surface samples
  ScoredGrasp major;
  std::vector<ScoredGrasp> supplementary;
};

struct NegativePoint {
  int sample = 0;
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();  // approach direction, same convention as Grasp::approach
};

struct SingleObjectGraspSet {
  std::string object_id;
  std::uint64_t seed = 0;
  int sample_count = 0;
  std::vector<MajorGrasp> majors;
  std::vector<NegativePoint> negatives;

  SingleObjectGraspSet transformed(const RigidTransform& T) const {
    SingleObjectGraspSet out = *this;
    for (MajorGrasp& m : out.majors) {
      m.major.grasp = m.major.grasp.transformed(T);
      for (ScoredGrasp& s : m.supplementary) s.grasp = s.grasp.transformed(T);
    }
    for (NegativePoint& n : out.negatives) {
      n.point = T.apply(n.point);
      n.normal = T.rotate(n.normal);
    }
    return out;
  }
};

/// {D_min, D_min + step, ...} up to d, with d appended when off the grid.
inline std::vector<double> enumerate_depths(double min_depth, double d, double step = 1.0) {
  require(step > 0, ErrorCode::InvalidArgument, "depth step must be positive");
  require(d >= min_depth, ErrorCode::DomainError, "deepest depth is below D_min");
  std::vector<double> out;
  constexpr double kGridTol = 1e-9;
  for (int k = 0;; ++k) {
    const double x = min_depth + k * step;
    if (x > d + kGridTol) break;
    out.push_back(std::min(x, d));
  }
  if (d - out.back() > kGridTol) out.push_back(d);
  return out;
}

/// Opening direction for rotation k of N about the approach axis.
inline Vec3 rotation_opening(const Vec3& approach, int k, int count) {
  int least = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(approach[i]) < std::abs(approach[least])) least = i;
  const Vec3 r0 = approach.cross(Vec3::Unit(least)).normalized();
  const double angle = 2.0 * std::numbers::pi * k / count;
  return (Eigen::AngleAxisd(angle, approach) * r0).normalized();
}

/// Per-object state reused across every point.
struct PlanContext {
  const ObjectSpec* object = nullptr;
  IndexedMesh mesh;
  GraspTarget target;

  PlanContext(const ObjectSpec& obj, const QualityConfig& qcfg)
      : object(&obj), mesh(obj.mesh) {
    target = GraspTarget::make(mesh, obj.centroid, obj.mu, qcfg);
  }
  PlanContext(const PlanContext&) = delete;
  PlanContext& operator=(const PlanContext&) = delete;
};

/// Rotation sweep, depth sweep and major/supplementary selection at one
/// surface point with outward normal `outward`.
inline PointPlan plan_point(const PlanContext& ctx, const Vec3& p, const Vec3& outward,
                            const GripperModel& gripper, const PlannerConfig& cfg) {
  PointPlan plan;
  plan.point = p;
  plan.approach = (-outward).normalized();
  const std::array<const IndexedMesh*, 1> scene{&ctx.mesh};

  struct Candidate {
    ScoredGrasp g;
    int rotation;
  };
  std::vector<Candidate> positives;
  for (int k = 0; k < cfg.rotations; ++k) {
    const Vec3 r = rotation_opening(plan.approach, k, cfg.rotations);
    const double deepest = approach_sweep(scene, p, plan.approach, r, gripper, cfg.sweep_limit);
    if (deepest < cfg.min_depth) continue;
    ++plan.valid_rotations;
    const double d = approach_distance(deepest, cfg.max_depth);
    for (double depth : enumerate_depths(cfg.min_depth, d, cfg.supp_step)) {
      const Grasp g{p, plan.approach, r, depth};
      const QualityResult q = grasp_quality(g, ctx.target, gripper, cfg.quality);
      ++plan.scored;
      if (q.q_c > 0) positives.push_back({ScoredGrasp{g, q.q_c}, k});
    }
  }
  if (positives.empty()) return plan;

  // Highest q_c, then smallest rotation index, then largest depth.
  std::sort(positives.begin(), positives.end(), [](const Candidate& a, const Candidate& b) {
    if (a.g.q_c != b.g.q_c) return a.g.q_c > b.g.q_c;
    if (a.rotation != b.rotation) return a.rotation < b.rotation;
    return a.g.grasp.depth > b.g.grasp.depth;
  });
  plan.major = positives.front().g;
  plan.supplementary.reserve(positives.size() - 1);
  for (std::size_t i = 1; i < positives.size(); ++i) plan.supplementary.push_back(positives[i].g);
  return plan;
}

/// Samples N surface points and plans each; points are processed in
/// parallel but merged in sample order.
inline SingleObjectGraspSet plan_object(const ObjectSpec& object, const GripperModel& gripper,
                                        const PlannerConfig& cfg, std::uint64_t seed, int jobs = 1) {
  require(cfg.is_valid(), ErrorCode::InvalidArgument, "invalid planner configuration");
  require(gripper.is_valid(), ErrorCode::InvalidArgument, "invalid gripper model");
  const PlanContext ctx(object, cfg.quality);
  const SurfaceSample samples = sample_surface(object.mesh, static_cast<std::size_t>(cfg.samples), seed);

  std::vector<PointPlan> plans(samples.cloud.size());
  parallel_for(plans.size(), jobs, [&](std::size_t i) {
    plans[i] = plan_point(ctx, samples.cloud.points[i], samples.cloud.normals[i], gripper, cfg);
  });

  SingleObjectGraspSet out;
  out.object_id = object.id;
  out.seed = seed;
  out.sample_count = cfg.samples;
  for (std::size_t i = 0; i < plans.size(); ++i) {
    PointPlan& pl = plans[i];
    if (pl.major) {
      out.majors.push_back(MajorGrasp{static_cast<int>(i), *pl.major, std::move(pl.supplementary)});
    } else {
      out.negatives.push_back(NegativePoint{static_cast<int>(i), pl.point, pl.approach});
    }
  }
  return out;
}

}  // namespace pngrasp
